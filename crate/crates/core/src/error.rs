use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum CareError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed input data, with the offending row (1-based, header excluded) and column.
    #[error("row {row}, column '{column}': {message}")]
    Parse { row: usize, column: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("BIF syntax error at line {line}: {message}")]
    BifSyntax { line: usize, message: String },

    #[error("invalid Bayesian network: {0}")]
    InvalidNetwork(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at iteration {iteration}: objective is {value}; try a smaller learning rate")]
    NonFinite { iteration: usize, value: f64 },

    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
}

pub type Result<T> = std::result::Result<T, CareError>;

impl CareError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CareError::Io { path: path.into(), source }
    }
}
