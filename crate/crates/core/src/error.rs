use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown {kind} token `{token}`")]
    Vocabulary { kind: &'static str, token: String },

    #[error("{kind} id {index} out of bounds (size {size})")]
    Bounds {
        kind: &'static str,
        index: usize,
        size: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("numeric error at layer {layer}, node {node}: {message}")]
    Numeric {
        layer: usize,
        node: usize,
        message: String,
    },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

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
