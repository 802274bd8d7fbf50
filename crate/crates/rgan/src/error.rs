use thiserror::Error;

use crate::train::TrainLog;

#[derive(Debug, Error)]
pub enum RganError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Neural(#[from] synthbt_neural::NeuralError),
    #[error(transparent)]
    Core(#[from] synthbt_core::Error),
    #[error("training diverged after {batches} batches: {reason}")]
    Diverged {
        batches: usize,
        reason: String,
        log: TrainLog,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RganError>;

pub(crate) fn validation(msg: impl Into<String>) -> RganError {
    RganError::Validation(msg.into())
}
