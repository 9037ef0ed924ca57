//! Mutual-coupling aware models of reconfigurable intelligent surfaces.
//!
//! Linear arrays of thin half-wave dipoles are described by their coupling
//! impedance matrix. The crate builds that matrix, the power-matching
//! decoupling network that turns the coupled model into an uncoupled one,
//! closed-form and iterative phase optimization for diagonal and
//! beyond-diagonal surfaces, and the small-spacing Legendre asymptotics of
//! the resulting array gain.
//!
//! Everything is generic over the real scalar ([`Real`]); the `*64` and `*32`
//! aliases below fix it to `f64` or `f32`.

pub mod analysis;
pub mod coupling;
pub mod error;
pub mod linalg;
pub mod network;
pub mod optimize;
pub mod scalar;

pub use analysis::{
    array_gain_bd, array_gain_diagonal, coupled_gain, coupled_gain_limit, f_n, g_n, legendre, min_f_n, theorem_bounds,
    LegendreEval, MinimumReport, Parity, TheoremReport,
};
pub use coupling::{
    build_coupling_matrix, condition_number, coupling_real_part, sqrt_spd, steering_vector, CouplingMatrix,
    ImpedanceMatrix, SpdFactor, SteeringVector,
};
pub use error::{Error, Result};
pub use linalg::{EIG_FLOOR, RCOND_FLOOR};
pub use network::{
    apply_decoupling, assemble_channel, assemble_channel_matrix, bd_equivalent_network, effective_channels,
    impedance_to_scattering, power_matching_network, scattering_to_impedance, ChannelTriple, DecouplingNetwork,
    LosScenario, RisConfig, Wiring,
};
pub use optimize::{
    bd_gain, closed_form_diagonal_gain, decoupled_bd, decoupled_diagonal, gradient_coupled_baseline,
    ignore_mc_baseline, optimal_diagonal_phases, uncoupled_diagonal, Diagnostics, GainResult, GradientOptions,
    Method,
};
pub use scalar::{Cplx, Real};

pub type Complex64 = Cplx<f64>;
pub type Complex32 = Cplx<f32>;

pub type ImpedanceMatrix64 = ImpedanceMatrix<f64>;
pub type ImpedanceMatrix32 = ImpedanceMatrix<f32>;
pub type CouplingMatrix64 = CouplingMatrix<f64>;
pub type CouplingMatrix32 = CouplingMatrix<f32>;
pub type SteeringVector64 = SteeringVector<f64>;
pub type SteeringVector32 = SteeringVector<f32>;
pub type DecouplingNetwork64 = DecouplingNetwork<f64>;
pub type DecouplingNetwork32 = DecouplingNetwork<f32>;
pub type ChannelTriple64 = ChannelTriple<f64>;
pub type ChannelTriple32 = ChannelTriple<f32>;
pub type LosScenario64 = LosScenario<f64>;
pub type LosScenario32 = LosScenario<f32>;
pub type RisConfig64 = RisConfig<f64>;
pub type RisConfig32 = RisConfig<f32>;
pub type GainResult64 = GainResult<f64>;
pub type GainResult32 = GainResult<f32>;
