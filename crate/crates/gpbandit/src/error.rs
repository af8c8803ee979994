//! Crate-wide error type. Every fallible operation returns `Result<T>` so
//! callers can distinguish bad inputs from numerical failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs have inconsistent shapes (point dimensions, vector lengths).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Cholesky factorization failed even after the jitter ladder was
    /// exhausted. `max_jitter` is the largest diagonal boost that was tried.
    #[error("covariance factorization failed (jitter escalated to {max_jitter:.3e} without success)")]
    CholeskyFailure { max_jitter: f64 },

    /// A query is outside the range an object supports.
    #[error("domain error: {0}")]
    OutOfRange(String),

    /// An exact computation would exceed its enumeration budget.
    #[error("size guard: {0}")]
    SizeGuard(String),

    /// Configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// One or more verification checks failed.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
