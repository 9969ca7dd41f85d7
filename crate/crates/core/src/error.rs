//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its documented precondition.
    #[error("invalid {name}: {reason}")]
    Invalid { name: &'static str, reason: String },

    /// A CSV cell failed to parse; `line` is the 1-based line in the file.
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },

    /// A CSV row had the wrong number of columns.
    #[error("csv structure error at line {line}: expected {expected} columns, found {found}")]
    CsvStructure {
        line: usize,
        expected: usize,
        found: usize,
    },

    /// An operation that requires data received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Feature dimension did not match the model or dataset.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    /// A class had too few samples for the requested fit.
    #[error("class {class} has too few samples ({count}) for this operation")]
    InsufficientData { class: usize, count: usize },

    /// Within-class scatter with zero trace; the J1 criterion is undefined.
    #[error("within-class scatter has zero trace")]
    SingularScatter,

    /// An IDX file did not match the expected binary layout.
    #[error("idx format error: {0}")]
    IdxFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs or configuration (CLI exit code 1)
    /// as opposed to runtime failures (exit code 2).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::CsvParse { .. }
                | Error::CsvStructure { .. }
                | Error::EmptyInput(_)
                | Error::DimMismatch { .. }
                | Error::InsufficientData { .. }
                | Error::IdxFormat(_)
        )
    }
}
