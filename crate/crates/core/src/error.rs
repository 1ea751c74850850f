use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate chain: {0}")]
    Degenerate(String),

    #[error("singular system (condition estimate {condition:e}): {context}")]
    Singular { condition: f64, context: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("coverage violation at state {state}, action {action}: target probability {target} with zero behavior probability")]
    Coverage { state: usize, action: usize, target: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("maze layout error: {0}")]
    Layout(String),

    #[error("I/O error at {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse { path: path.into(), message: message.to_string() }
    }
}
