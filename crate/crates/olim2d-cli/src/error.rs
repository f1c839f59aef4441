//! CLI-level errors carrying the process exit code.

use std::fmt;

/// Usage errors (bad flags, bad config, invalid requests) exit with 2;
/// runtime failures name the stage that failed and exit with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime { stage: String, message: String },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(stage: &str, err: impl fmt::Display) -> Self {
        CliError::Runtime { stage: stage.to_string(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime { stage, message } => {
                write!(f, "error in stage '{stage}': {message}")
            }
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;
