//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin magnitude: {0}")]
    InvalidSpin(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("state did not thermalize within t = {max_time} (reached 1 - F = {residual:.3e})")]
    NotThermalized { max_time: f64, residual: f64 },

    #[error("limit cycle not reached within {max_cycles} cycles (last 1 - F = {residual:.3e})")]
    LimitCycleNotConverged { max_cycles: usize, residual: f64 },
}
