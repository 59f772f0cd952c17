use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (zero vector, eps ∉ (0,1), ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation was called on data it does not support (valuation of a real, inexact oracle input).
    #[error("usage error: {0}")]
    Usage(String),

    /// An input violates a structural invariant (non-unimodular matrix, probabilities not summing to 1).
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
