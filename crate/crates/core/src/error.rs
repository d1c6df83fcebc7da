use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for signal of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("transfer function has a pole at s = {s}")]
    Pole { s: Complex64 },

    #[error("ill-posed discretization: {0}")]
    IllPosedDiscretization(String),

    #[error("no equilibrium exists: a0 + K = 0")]
    NoEquilibrium,

    #[error("order {order} has no rational approximation with denominator <= {max_denominator}")]
    Incommensurate { order: f64, max_denominator: u64 },

    #[error("root finding did not converge after {iterations} iterations (worst relative residual {max_residual:e})")]
    RootFinding {
        iterations: usize,
        max_residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
