use std::path::PathBuf;

use stripefree::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("solver did not reach the requested gap: {0}")]
    NotConverged(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// `2` for anything the user can fix in the configuration or inputs,
    /// `3` for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigLine { .. } | CliError::Config(_) | CliError::Io { .. } | CliError::Format { .. } => 2,
            CliError::NotConverged(_) => 3,
            CliError::Core(e) => match e {
                CoreError::InvalidDims(_)
                | CoreError::DataLength { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::ChannelCount { .. }
                | CoreError::ZeroKernel
                | CoreError::ZeroImage
                | CoreError::InvalidParameter(_) => 2,
                _ => 3,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
