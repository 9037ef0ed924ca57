//! Parameter sweeps over the ris-core models with deterministic CSV output.

pub mod config;
pub mod sweep;

pub use config::{validate_and_load, Axis, ConfigError, SweepSpec};
pub use sweep::{evaluate, render_csv, run_sweep, write_csv, Point, Row, SweepError};
