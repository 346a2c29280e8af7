use thiserror::Error;

/// Errors raised by the analytical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside domain ({domain})")]
    Domain {
        function: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("port index {index} out of range 1..={ports}")]
    IndexOutOfRange { index: usize, ports: usize },
    #[error("invalid port grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(&'static str),
    #[error("cholesky factorization failed at pivot {pivot} (value {value:e})")]
    Factorization { pivot: usize, value: f64 },
    #[error("invalid system parameter `{field}`: {reason}")]
    InvalidParams {
        field: &'static str,
        reason: &'static str,
    },
    #[error("target accuracy must be positive and finite, got {0}")]
    InvalidAccuracy(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too few trials: {got} < {min}")]
    TooFewTrials { got: u64, min: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;
