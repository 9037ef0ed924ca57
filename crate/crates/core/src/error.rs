use thiserror::Error;

/// Failures raised by the channel, network and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Smallest eigenvalue fell below the relative floor (or is negative).
    #[error("ill-conditioned coupling matrix: eigenvalue ratio {ratio:e} below floor {floor:e}")]
    IllConditioned { ratio: f64, floor: f64 },

    /// Linear solve through a network whose reciprocal condition is below the floor.
    #[error("singular network: reciprocal condition {rcond:e} below floor {floor:e}")]
    SingularNetwork { rcond: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
