//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input has no observed components")]
    AllMasked,

    #[error("empty data")]
    EmptyData,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate quad: the two reference joints coincide")]
    DegenerateQuad,

    #[error("need at least {needed} distinct descriptors, got {got}")]
    TooFewDescriptors { needed: usize, got: usize },

    #[error("window width {q} exceeds available frames ({len})")]
    WindowExceedsFrames { len: usize, q: usize },

    #[error("sequence {id:?} too short: {len} frames after preprocessing, window needs {q}")]
    SequenceTooShort { id: String, len: usize, q: usize },

    #[error("no labeled neuron reachable: input is unclassifiable")]
    Unclassifiable,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("checksum mismatch: file is corrupt or truncated")]
    ChecksumMismatch,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
