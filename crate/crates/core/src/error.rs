use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(ValidationReport),

    #[error("invalid input: {0}")]
    Input(String),

    /// Carries the last iterate so callers can inspect how far the iteration got.
    #[error("no convergence after {iterations} iterations (last step {last_step:e})")]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        last: Vec<f64>,
    },

    /// The node partition guessed from an approximate equilibrium could not be
    /// made self-consistent. Usually means `tol_class` is too loose.
    #[error("inconsistent partition: {0}")]
    Inconsistent(String),

    #[error("flow is not critical: the equilibrium is unique")]
    NotCritical,
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
