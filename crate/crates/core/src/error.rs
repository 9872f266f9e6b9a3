use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: line {line}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric {
        path: PathBuf,
        line: u64,
        column: usize,
        value: String,
    },

    #[error("{path}: line {line} (row {row}): unknown label {label:?}")]
    UnknownLabel {
        path: PathBuf,
        line: u64,
        row: usize,
        label: String,
    },

    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("class {class:?} has {count} samples, need at least {required}")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigendecomposition did not converge within {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("id mismatch between source 0 and source {source_index} at row {row}: {expected:?} vs {actual:?}")]
    IdMismatch {
        source_index: usize,
        row: usize,
        expected: String,
        actual: String,
    },

    #[error("label mismatch between source 0 and source {source_index} at row {row}")]
    LabelMismatch { source_index: usize, row: usize },

    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
