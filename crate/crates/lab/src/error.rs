use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    /// Schema or value error; `pointer` is a JSON pointer into the config.
    #[error("invalid config at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error("verification failed: {}", failed.join(", "))]
    Verification { failed: Vec<String> },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Numerics(String),
}

impl RunError {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Verification { .. } => 3,
            _ => 1,
        }
    }
}

/// Lifts a core error into [`RunError::Numerics`].
pub(crate) fn numerics<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Numerics(e.to_string())
}
