//! Error type shared by all modules of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while loading data or running the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A text file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// An embedding set and a frequency table are defined over different vocabularies.
    #[error("vocabulary mismatch between embeddings and frequency table")]
    VocabularyMismatch,

    /// The vocabulary intersection of embeddings and frequency list is empty.
    #[error("empty intersection between embedding vocabulary and frequency list")]
    EmptyIntersection,

    /// An input collection that must be nonempty is empty.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// The input is numerically degenerate for the requested operation
    /// (e.g. zero weighted covariance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A parameter is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested quantity is mathematically undefined for this input.
    #[error("undefined result: {0}")]
    Undefined(String),

    /// A serialized model or report failed to round-trip.
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
