use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: field `{field}`: {message}")]
    Validation { path: String, line: usize, field: &'static str, message: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("probe context could not be parsed: {0}")]
    Unparseable(String),

    #[error("external solver: {0}")]
    External(#[from] crate::external::ExternalError),

    #[error("ensemble: {0}")]
    Ensemble(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
