use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value produced at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("divergence at iteration {iteration}: |value| = {magnitude:e} exceeds 1e12")]
    Divergence { iteration: usize, magnitude: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("graph is not connected")]
    Disconnected,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("consensus matrix is not averaged: smallest eigenvalue {lambda_min} must lie in (-1, 1)")]
    NotAveraged { lambda_min: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue}")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("cost function has no gradient")]
    MissingGradient,

    #[error("all sampled pairs coincide")]
    CoincidentSamples,

    #[error("inner solver did not converge after {iterations} steps (residual {residual:e})")]
    InnerSolver { iterations: usize, residual: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

/// Divergence guard shared by every iterative routine: any coordinate that is
/// non-finite or larger than 1e12 in magnitude aborts the run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

pub(crate) fn guard_finite(values: &[f64], iteration: usize) -> Result<()> {
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        if v.abs() > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence {
                iteration,
                magnitude: v.abs(),
            });
        }
    }
    Ok(())
}
