use std::io;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum RlError {
    /// Malformed or out-of-range input to an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A caller broke an operation's precondition (illegal action, empty buffer, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A log-probability would be infinite.
    #[error("divergence: {0}")]
    Divergence(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, RlError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(RlError::InvalidInput(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(RlError::Contract(msg.into()))
}
