use thiserror::Error;

/// Errors raised by the library. Every fallible operation returns this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for {n} terms")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("strong convexity constant must be positive (mu = {0})")]
    NotStronglyConvex(f64),

    #[error("inner scalar solve failed after {iterations} iterations (residual {residual:e})")]
    InnerSolve { iterations: usize, residual: f64 },

    #[error("solver state not ready: {0}")]
    NotReady(&'static str),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("reference solve did not converge (gradient-map norm {0:e})")]
    NoConvergence(f64),

    #[error("declared constant violated on {count} sampled pairs (worst ratio {worst:e})")]
    ConstantViolation { count: usize, worst: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
