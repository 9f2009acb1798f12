use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing parameter; the message names it.
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] mtp_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 for invalid input, 3 for numerical or model failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::Output(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::io("write failed", e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
