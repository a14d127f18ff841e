use std::io;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("failed to converge: {0}")]
    NonConvergence(String),

    #[error("divergent integral (partial value {partial:e})")]
    Divergent { partial: f64 },

    #[error("resolution check failed: {0}")]
    Resolution(String),

    #[error("support violation: {0}")]
    Support(String),

    #[error("blow-up detected at t = {t} (step {step})")]
    BlowUp {
        t: f64,
        step: u64,
        snapshot: Box<crate::solver::SimState>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
