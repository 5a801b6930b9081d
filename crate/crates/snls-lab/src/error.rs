use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] snls_core::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        LabError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
