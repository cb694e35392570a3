use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch { context: &'static str, expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vocabulary is empty after applying frequency thresholds")]
    EmptyVocabulary,

    #[error("cannot normalize a zero vector{}", id.map(|i| format!(" (id {i})")).unwrap_or_default())]
    ZeroVector { id: Option<u64> },

    #[error("duplicate id {0}")]
    DuplicateId(u64),

    #[error("unknown id {0}")]
    UnknownId(u64),

    #[error("empty collection: {0}")]
    Empty(&'static str),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("{path}: bad magic, expected {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("{path}: unsupported format version {found} (expected {expected})")]
    VersionMismatch { path: PathBuf, expected: u32, found: u32 },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("unknown {kind} {name:?} (known: {known})")]
    UnknownName { kind: &'static str, name: String, known: String },

    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: u64, detail: String },

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
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }
}
