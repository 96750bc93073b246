use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by dataset handling, model fitting, and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("label column `{0}` appears more than once in header")]
    AmbiguousLabelColumn(String),
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("label column has more than two classes: {0:?}")]
    TooManyClasses(Vec<String>),
    #[error("labels must contain both classes, found only {0:?}")]
    SingleClass(Vec<String>),
    #[error("label `{value}` at row {row} does not match the configured label mapping")]
    UnmappedLabel { row: usize, value: String },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: non-finite value `{value}`")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty row set")]
    EmptyRows,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "requested {requested} training cases per class but class {class} has only {available}"
    )]
    ClassTooSmall {
        class: u8,
        requested: usize,
        available: usize,
    },
    #[error("{0} is undefined: the evaluation set lacks a class")]
    UndefinedMetric(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
