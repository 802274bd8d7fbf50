use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// The input is well-formed but outside the operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("AR(2) process is not stationary (root moduli {0:.6}, {1:.6})")]
    NonStationary(f64, f64),

    #[error("operation requires a {expected} process, got {actual}")]
    WrongProcess {
        expected: &'static str,
        actual: &'static str,
    },

    /// Every configuration in the grid produced an undefined score.
    #[error("no viable strategy: every configuration has an undefined Sharpe ratio")]
    NoViableStrategy,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
