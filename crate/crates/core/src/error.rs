use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tensor shape {shape:?} is invalid: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: String },

    #[error("mode {mode} has extent {extent} but the vector has length {len}")]
    ModeLengthMismatch { mode: usize, extent: usize, len: usize },

    #[error("mode {mode} is out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("flat index {index} is out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric coefficient matrix for {elements} elements exceeds the cap of {cap}; use the streaming or separable tensor distance")]
    MetricTooLarge { elements: usize, cap: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training data contains a single class; need both labels")]
    SingleClass,

    #[error("class `{0}` has no training samples")]
    EmptyClass(String),

    #[error("class `{class}` has {count} samples, fewer than the {folds} folds requested")]
    ClassTooSmall { class: String, count: usize, folds: usize },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("{0}")]
    Partition(String),

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },

    #[error("{path}: header mismatch, expected columns {expected}")]
    Header { path: PathBuf, expected: String },

    #[error("unsupported model format version {found}; supported: {supported:?}")]
    UnsupportedVersion { found: u64, supported: Vec<u64> },

    #[error("unknown model family `{0}`")]
    UnknownFamily(String),

    #[error("malformed model document: {0}")]
    Document(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
