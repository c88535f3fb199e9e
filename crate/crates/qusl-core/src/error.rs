//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed binary input (CIFAR record, dataset cache, ...).
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("unsupported format in {path}: {msg}")]
    UnsupportedFormat { path: PathBuf, msg: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("capacity exceeded: need {needed}, have {available}")]
    Capacity { needed: usize, available: usize },

    #[error("cannot normalize an all-zero vector")]
    ZeroVector,

    #[error("qubit index {qubit} out of range for {qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, qubits: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("qasm parse error at line {line}: {msg}")]
    QasmParse { line: usize, msg: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("json error: {0}")]
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
