use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} exceeds the brute-force budget ({size} > {limit})")]
    BudgetExceeded {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("length mismatch: expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-physical input: {0}")]
    NonPhysical(String),

    #[error("index {index} out of range 0..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("unsupported gate arity {0}")]
    UnsupportedArity(usize),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("decode error: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn budget(what: &'static str, size: u128, limit: u128) -> Result<()> {
    if size > limit {
        Err(Error::BudgetExceeded { what, size, limit })
    } else {
        Ok(())
    }
}
