use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty calibration set")]
    EmptyCalibration,

    #[error("invalid score at position {index}: {value}")]
    InvalidScore { index: usize, value: f64 },

    #[error("invalid alpha {0}: must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("invalid quantile levels: {0}")]
    InvalidLevels(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("model was fitted without a median level")]
    MissingMedian,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("{path}: target column `{column}` not found")]
    MissingTarget { path: PathBuf, column: String },

    #[error("{path}: row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    BadCell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{0}: file has no data rows")]
    EmptyFile(PathBuf),

    #[error("all training responses are zero; cannot standardize")]
    ZeroScale,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
