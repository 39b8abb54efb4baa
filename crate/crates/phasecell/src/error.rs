//! Error type shared by every pipeline stage.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Decode { path: PathBuf, msg: String },

    #[error("insufficient frames: found {found}, need at least {need}")]
    InsufficientFrames { found: usize, need: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParam { name: String, msg: String },

    #[error("{path}:{line}: {msg}")]
    Config {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("svd failed: {0}")]
    Svd(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("cell placement failed after {attempts} attempts: {msg}")]
    CellPlacement { attempts: usize, msg: String },

    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn decode(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Decode {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn param(name: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.into(),
            msg: msg.into(),
        }
    }

    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Extension for attaching stage names to fallible pipeline steps.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
