use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("document has no visible text after stripping")]
    EmptyDocument,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{path}:{line}: malformed record: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("backward already ran on this tape; reset it before reuse")]
    StaleTape,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{kind} id {id} out of range (vocabulary size {size})")]
    Vocab {
        kind: &'static str,
        id: usize,
        size: usize,
    },

    #[error("invalid gold label: {0}")]
    Label(String),

    #[error("gold answer is empty")]
    InvalidGold,

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("vocabulary hash mismatch: checkpoint {expected}, vocabulary {actual}")]
    VocabHash { expected: String, actual: String },

    #[error("{skipped} of {total} pages failed ingest (more than 10%)")]
    DataQuality { skipped: usize, total: usize },

    #[error("unknown field {0:?}")]
    UnknownField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
