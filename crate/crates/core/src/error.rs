use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A required feature or column is absent.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("type error: feature `{feature}` expected {expected}, found {found}")]
    Type {
        feature: String,
        expected: &'static str,
        found: String,
    },

    #[error("row {row}, column `{column}`: {message}")]
    Row {
        row: usize,
        column: String,
        message: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    /// Labels contain a single class, so the fit or metric is undefined.
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("no grid value keeps the model within {cap} original features; try stronger penalties (smaller C)")]
    CapInfeasible { cap: usize },

    #[error("search stopped after {elapsed_secs:.3}s before any incumbent was found")]
    NoIncumbent { elapsed_secs: f64 },

    #[error("audit undefined: {0}")]
    AuditUndefined(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    /// True when the failure stems from user input or configuration rather
    /// than an internal fault.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Json(_))
    }
}
