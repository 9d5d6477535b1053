//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the operation.
    #[error("{context}: dimension mismatch, expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An operation that requires at least one element got none.
    #[error("{0} must not be empty")]
    Empty(&'static str),

    /// The training loss became NaN or infinite.
    #[error("training diverged at iteration {iteration}: loss is not finite")]
    Diverged { iteration: usize },

    /// A finite-difference probe produced a non-finite loss.
    #[error("non-finite loss while perturbing parameter {parameter}")]
    NonFinitePerturbation { parameter: String },

    /// A dataset or model file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration or argument value is out of its allowed range.
    #[error("invalid {what}: {details}")]
    Invalid { what: &'static str, details: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: &'static str, details: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            details: details.into(),
        }
    }
}
