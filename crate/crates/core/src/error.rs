use thiserror::Error;

use crate::joint::JointResult;

/// Errors produced by the coverage models.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violated its domain (negative height, non-positive density, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A user position is outside the triangular evaluation domain.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed: estimate {estimate:e} with error {error:e} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    /// The high-rise search ran out of candidates before reaching the target.
    #[error("target {target} unreachable; best joint probability {:.6} with {} high-rise APs per 100", best.p_joint, best.high_rise_count_per_100.unwrap_or(0))]
    Infeasible { target: f64, best: JointResult },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
