//! Grid evaluation and CSV emission.

use std::io::{self, Write};

use rayon::prelude::*;
use ris_core::optimize::{decoupled_bd, decoupled_diagonal, gradient_coupled_baseline, ignore_mc_baseline, uncoupled_diagonal};
use ris_core::{Complex64, Error, GainResult64, GradientOptions, LosScenario64, Method};
use thiserror::Error as ThisError;

use crate::config::{Axis, SweepSpec};

#[derive(Debug, ThisError)]
pub enum SweepError {
    #[error("cannot build a worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("thread count must be at least 1")]
    NoThreads,
}

/// Numbers reported for a successfully evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub array_gain: f64,
    pub channel_gain: f64,
    pub iterations: usize,
    pub converged: bool,
    pub condition_number: Option<f64>,
}

impl From<GainResult64> for Point {
    fn from(r: GainResult64) -> Self {
        Point {
            array_gain: r.array_gain,
            channel_gain: r.channel_gain,
            iterations: r.diagnostics.iterations,
            converged: r.diagnostics.converged,
            condition_number: r.diagnostics.condition_number,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis_value: f64,
    pub method: Method,
    pub outcome: Result<Point, Error>,
}

impl Row {
    /// `ok`, or the failure kind of the point.
    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(_) => "ok",
            Err(Error::IllConditioned { .. }) => "ill_conditioned",
            Err(Error::SingularNetwork { .. }) => "singular_network",
            Err(Error::InvalidArgument { .. }) => "invalid_argument",
            Err(Error::DimensionMismatch { .. }) => "dimension_mismatch",
        }
    }

    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Scenario of the grid point at `axis_value`.
pub fn scenario_at(spec: &SweepSpec, axis_value: f64) -> LosScenario64 {
    let mut s = LosScenario64 {
        loss_ratio: spec.loss_ratio,
        ref_resistance: spec.ref_resistance,
        pathloss_dr: spec.pathloss_dr,
        pathloss_rs: spec.pathloss_rs,
        z_ds: Complex64::new(spec.z_ds.0, spec.z_ds.1),
        ..LosScenario64::new(spec.elements, spec.spacing, spec.angle_tx, spec.angle_rx)
    };
    match spec.axis {
        Axis::SpacingD => s.spacing = axis_value,
        Axis::AngleRx => s.angle_rx = axis_value,
        Axis::LossGamma => s.loss_ratio = axis_value,
        Axis::ElementsN => s.elements = axis_value as usize,
    }
    s
}

pub fn gradient_options(spec: &SweepSpec) -> GradientOptions {
    GradientOptions {
        max_iters: spec.max_iters,
        tol: spec.tol,
        ..GradientOptions::default()
    }
}

/// Evaluates one method at one grid point.
pub fn evaluate(spec: &SweepSpec, axis_value: f64, method: Method) -> Result<Point, Error> {
    let s = scenario_at(spec, axis_value);
    let raw = s.channels()?;
    let result = match method {
        Method::Uncoupled => uncoupled_diagonal(&raw, &s.uncoupled_impedance()?)?,
        Method::DecoupledDiagonal => decoupled_diagonal(&raw, &s.array_impedance()?)?,
        Method::Bd => decoupled_bd(&raw, &s.array_impedance()?)?,
        Method::IgnoreMc => ignore_mc_baseline(&raw, &s.array_impedance()?)?,
        Method::GradientCoupled => gradient_coupled_baseline(&raw, &s.array_impedance()?, &gradient_options(spec))?,
    };
    Ok(result.into())
}

/// Evaluates every (axis value, method) pair on `threads` workers.
///
/// Rows come back ordered by axis value, then by method, whatever the
/// scheduling; failed points are kept as rows.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<Vec<Row>, SweepError> {
    if threads == 0 {
        return Err(SweepError::NoThreads);
    }
    let jobs: Vec<(f64, Method)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.methods.iter().map(move |&m| (v, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(axis_value, method)| Row {
                axis_value,
                method,
                outcome: evaluate(spec, axis_value, method),
            })
            .collect()
    }))
}

pub const COLUMNS: [&str; 8] = [
    "axis_value",
    "method",
    "array_gain",
    "channel_gain",
    "iterations",
    "converged",
    "condition_number",
    "status",
];

/// 17 significant digits, or `NaN`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// Writes the comment header, column row and one line per row, `\n` only.
pub fn write_csv<W: Write>(spec: &SweepSpec, rows: &[Row], mut out: W) -> io::Result<()> {
    let f = format_number;
    writeln!(out, "# axis = {} ({})", spec.axis, spec.axis.unit())?;
    writeln!(
        out,
        "# N = {}, d = {} wavelengths, alpha_tx = {} rad, alpha_rx = {} rad, gamma = {}",
        spec.elements,
        f(spec.spacing),
        f(spec.angle_tx),
        f(spec.angle_rx),
        f(spec.loss_ratio)
    )?;
    writeln!(
        out,
        "# R = {} Ohm, gamma_dr = {}, gamma_rs = {}, z_ds = {} + j{} Ohm",
        f(spec.ref_resistance),
        f(spec.pathloss_dr),
        f(spec.pathloss_rs),
        f(spec.z_ds.0),
        f(spec.z_ds.1)
    )?;
    writeln!(out, "# seed = {}, max_iters = {}, tol = {}", spec.seed, spec.max_iters, f(spec.tol))?;
    writeln!(out, "# array_gain: dimensionless (normalized by gamma_dr gamma_rs R^2); channel_gain: Ohm^2")?;
    writeln!(out, "{}", COLUMNS.join(","))?;
    for row in rows {
        let axis_value = match spec.axis {
            Axis::ElementsN => format!("{}", row.axis_value as usize),
            _ => f(row.axis_value),
        };
        match &row.outcome {
            Ok(p) => writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                axis_value,
                row.method,
                f(p.array_gain),
                f(p.channel_gain),
                p.iterations,
                p.converged,
                p.condition_number.map_or_else(|| "NaN".to_owned(), f),
                row.status()
            )?,
            Err(_) => writeln!(out, "{},{},NaN,NaN,0,false,NaN,{}", axis_value, row.method, row.status())?,
        }
    }
    Ok(())
}

/// CSV text of a sweep.
pub fn render_csv(spec: &SweepSpec, rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(spec, rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}
