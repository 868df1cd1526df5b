use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MotgnnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MotgnnError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate training: {0}")]
    Degenerate(String),

    #[error("{0}")]
    Checkpoint(String),

    #[error("{stage} failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<MotgnnError>,
    },
}

impl MotgnnError {
    pub(crate) fn csv(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        MotgnnError::Csv {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        MotgnnError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
