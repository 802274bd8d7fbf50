use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<synthbt_core::Error> for CliError {
    fn from(e: synthbt_core::Error) -> Self {
        use synthbt_core::Error as E;
        match e {
            E::Io(_) | E::Csv(_) | E::Json(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<synthbt_rgan::RganError> for CliError {
    fn from(e: synthbt_rgan::RganError) -> Self {
        use synthbt_rgan::RganError as E;
        match e {
            E::Validation(_) => CliError::Validation(e.to_string()),
            E::Core(inner) => inner.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<synthbt_pipeline::PipelineError> for CliError {
    fn from(e: synthbt_pipeline::PipelineError) -> Self {
        use synthbt_pipeline::PipelineError as E;
        match e {
            E::Validation(_) => CliError::Validation(e.to_string()),
            E::Core(inner) => inner.into(),
            E::Gan(inner) => inner.into(),
            E::Diverged { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
