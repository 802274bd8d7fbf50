use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("forward record does not match the current parameters")]
    StaleRecord,
    #[error("incomplete forward record: {0}")]
    IncompleteRecord(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, NeuralError>;
