use std::path::PathBuf;

use thiserror::Error;

/// Everything a subcommand can fail with, mapped onto the exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 1 for configuration and usage problems, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Config(_) | Self::Io { .. } => 1,
            Self::Numerical(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<dephase_core::Error> for CliError {
    fn from(e: dephase_core::Error) -> Self {
        use dephase_core::Error as E;
        match e {
            E::Config(_) | E::Datum(_) | E::Format(_) => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
