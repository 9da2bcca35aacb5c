use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}:{line}: column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: String,
        message: String,
    },
    #[error("non-finite value during training: {0}")]
    NonFinite(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code for the CLI: 2 for configuration and data problems,
    /// 1 for failures that happen while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) => 1,
            Error::Dimension(_)
            | Error::Config(_)
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::Io { .. }
            | Error::Format { .. } => 2,
        }
    }
}
