//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by dataset ingestion, metric computation and the
/// anonymization methods.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// A cell that does not parse as a finite real number. `row` is the
    /// 1-based data row (the header is row 0).
    #[error("row {row}, column {column:?}: {value:?} is not a finite number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dataset must have at least 2 records, found {found}")]
    TooFewRecords { found: usize },

    #[error("dataset must have at least one attribute")]
    NoAttributes,

    #[error("dataset has {names} attribute names but {columns} value columns")]
    NameCountMismatch { names: usize, columns: usize },

    #[error("non-finite value at record {row}, attribute {column:?}")]
    NonFinite { row: usize, column: String },

    #[error("no attribute named {0:?}")]
    UnknownAttribute(String),

    #[error("shape mismatch in {context}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        context: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("sweep failed at grid value {parameter}, replicate {replicate}: {source}")]
    SweepPoint {
        parameter: f64,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn shape_mismatch(
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    ) -> Self {
        Error::ShapeMismatch {
            context,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    /// Process exit code class: 1 usage/config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) => 1,
            Error::Numeric(_) => 3,
            Error::SweepPoint { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
