use thiserror::Error;

use fsample_dist::DistError;

/// Command failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameter combinations.
    #[error("usage: {0}")]
    Usage(String),
    /// A verification suite or embedded equivalence check failed.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] fsample_core::Error),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output encoding: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(fsample_core::Error::Parameter(_)) => 2,
            CliError::Dist(DistError::Core(fsample_core::Error::Parameter(_))) => 2,
            _ => 3,
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

pub type Result<T, E = CliError> = std::result::Result<T, E>;
