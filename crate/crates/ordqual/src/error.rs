use std::path::PathBuf;

use serde::Serialize;

/// A row dropped (lenient) or rejected (strict) during ingestion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedRow {
    /// 1-based data row, header excluded.
    pub row: usize,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("{} invalid row(s), first at row {}: {}", .0.len(), .0[0].row, .0[0].message)]
    InvalidRows(Vec<DroppedRow>),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: String, expected: u32 },
    #[error("population file does not list class `{0}`")]
    MissingClass(&'static str),
    #[error("negative count for `{0}`")]
    NegativeCount(String),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("score files disagree on instance ids: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Core(#[from] ordqual_core::Error),
}

impl IoError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io { path: path.into(), source }
    }

    /// Stable name for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::Io { .. } => "IoFailure",
            IoError::MissingColumn(_) => "MissingColumn",
            IoError::InvalidRows(_) => "InvalidRows",
            IoError::Malformed { .. } => "Malformed",
            IoError::SchemaVersionMismatch { .. } => "SchemaVersionMismatch",
            IoError::MissingClass(_) => "MissingClass",
            IoError::NegativeCount(_) => "NegativeCount",
            IoError::UnknownKey { .. } => "UnknownKey",
            IoError::DuplicateKey { .. } => "DuplicateKey",
            IoError::IdMismatch(_) => "IdMismatch",
            IoError::Core(e) => e.kind(),
        }
    }
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;
