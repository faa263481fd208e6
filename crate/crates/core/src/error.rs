use thiserror::Error;

/// Errors surfaced by samplers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Input has the wrong dimensionality.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Input rejected by a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical procedure failed; the message carries the residual or
    /// budget information needed to judge how badly.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
