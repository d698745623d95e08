use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read repository at {path}: {reason}")]
    Repository { path: PathBuf, reason: String },

    #[error("git {command} failed: {stderr}")]
    Git { command: String, stderr: String },

    #[error("repository not found: {0}")]
    RepoNotFound(String),

    #[error("forge request to {url} failed: {reason}")]
    Http { url: String, reason: String },

    #[error("{path}: invalid field `{field}`: {reason}")]
    Schema {
        path: PathBuf,
        field: String,
        reason: String,
    },

    #[error("parse failed at {line}:{column}: {message}")]
    ParseFailed {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("no language adapter registered for `{0}`")]
    UnknownLanguage(String),

    #[error("duplicate commit hash `{hash}` in label file")]
    DuplicateLabel { hash: String },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
