use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fractembed::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("undefined name {0:?}")]
    UnknownName(String),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 64 for malformed input, 70 for resource limits, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::UnknownName(_) | CliError::Core(fractembed::Error::Parse(_)) => 64,
            CliError::Core(fractembed::Error::ResourceLimit { .. }) => 70,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
