//! Crate-wide error type.

use std::path::PathBuf;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by data loading, validation, and the statistical pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: empty input")]
    EmptyInput { path: PathBuf },

    #[error("{path}: row {row} has {got} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {text:?} as a number")]
    ParseCell {
        path: PathBuf,
        row: usize,
        col: usize,
        text: String,
    },

    #[error("{path}: malformed metadata: {detail}")]
    Metadata { path: PathBuf, detail: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("curve set needs at least 2 samples per curve, got {p}")]
    TooFewSamples { p: usize },

    #[error("index {index} out of range for {n} rows")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate index {index} in nominal set")]
    DuplicateIndex { index: usize },

    #[error("nominal set has {n0} rows, need at least 4")]
    NominalTooSmall { n0: usize },

    #[error("test set is empty: all {n} rows are nominal")]
    EmptyTestSet { n: usize },

    #[error("{value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("sample count {p} is not a power of two")]
    NotPowerOfTwo { p: usize },

    #[error("feature matrix has {got} columns, a full basis needs {expected}")]
    IncompleteBasis { expected: usize, got: usize },

    #[error("basis fitted for {expected} samples per curve, data has {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("PCA fit needs at least 2 curves, fit set has {got}")]
    InsufficientFitData { got: usize },

    #[error("feature rows {rows:?} overlap the PCA fit set")]
    ContaminatedFeatures { rows: Vec<usize> },

    #[error("empty sample")]
    EmptySample,

    #[error("p-value {value} outside [0, 1]")]
    InvalidPValue { value: f64 },

    #[error("neighbour count k={k} must satisfy 1 <= k < n={n}")]
    InvalidNeighbourCount { k: usize, n: usize },

    #[error("bridge table needs at least {min} draws, got {got}")]
    InsufficientDraws { min: usize, got: usize },

    #[error("bridge table needs truncation of at least {min} terms, got {got}")]
    InsufficientTruncation { min: usize, got: usize },

    #[error("2-Wasserstein p-values need a bridge table; none was supplied")]
    MissingBridgeTable,

    #[error("invalid configuration: {detail}")]
    Config { detail: String },

    #[error("level {level}: {source}")]
    Level {
        level: String,
        #[source]
        source: Box<Error>,
    },

    #[error("feature set {feature_set} failed at stage {stage}: {source}")]
    Stage {
        feature_set: u8,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(detail: impl Into<String>) -> Self {
        Error::Config { detail: detail.into() }
    }
}
