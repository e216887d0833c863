use std::io;
use std::path::Path;

use dradar_core::Error;

/// Failures surfaced by the command-line driver, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("numerical failure: {0}")]
    Numerical(Error),

    #[error("transport failure in round {round}: {reason}")]
    Transport { round: u64, reason: String },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// A core error caused by invalid scenario contents.
    pub fn config(e: Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// 0 success, 1 usage or input problems, 2 numerical failure, 3 transport failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::Transport { .. } => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Protocol { round, reason } => CliError::Transport { round, reason },
            Error::Decode(what) => CliError::Transport { round: 0, reason: what.into() },
            other => CliError::Numerical(other),
        }
    }
}
