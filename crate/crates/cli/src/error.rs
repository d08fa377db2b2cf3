use thiserror::Error;

/// Exit status for a run in which every compared pair succeeded.
pub const EXIT_OK: i32 = 0;
/// Exit status for a runtime failure (in `compare`: no pair succeeded).
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for bad arguments, unreadable inputs or invalid data.
pub const EXIT_USAGE: i32 = 2;

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
            CliError::Usage(_) | CliError::Validation(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}
