use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("low-rank update is singular (denominator {0:e})")]
    SingularUpdate(f64),
    #[error("zero step requested for a low-rank update")]
    ZeroStep,
    #[error("enumeration space of {0} points exceeds the cap")]
    TooLarge(u128),
    #[error("every variable is fixed")]
    AllFixed,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: &str) -> Error {
    Error::InvalidInput(String::from(msg))
}
