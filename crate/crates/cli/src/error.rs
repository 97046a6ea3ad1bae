use std::process::ExitCode;

use safechain::{Error, RunError};

/// Failures of a CLI command, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unsafe initialization: level {level} has h = {value}")]
    UnsafeInit { level: usize, value: f64 },
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
            CliError::UnsafeInit { .. } => 4,
        }
    }

    /// Maps a core error raised while setting up gains or a run.
    pub fn from_init(e: Error) -> Self {
        match e {
            Error::UnsafeInitialization { level, value } => CliError::UnsafeInit { level, value },
            Error::NumericalBlowup { .. } | Error::InfeasibleConstraint { .. } => {
                CliError::Runtime(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Setup(cause) => CliError::from_init(cause),
            aborted @ RunError::Aborted { .. } => CliError::Runtime(aborted.to_string()),
        }
    }
}
