use thiserror::Error;

use crate::granule::Side;
use crate::metadata::RowViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("bound/side mismatch: bound {bound} lies on the wrong side of median {median} for {side:?}")]
    BoundSideMismatch { bound: f64, median: f64, side: Side },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid profile: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidProfile(Vec<RowViolation>),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class '{class}' has no observations{}", .context.as_deref().map(|c| format!(" in {c}")).unwrap_or_default())]
    MissingClass { class: String, context: Option<String> },

    #[error("stratification infeasible for '{dataset}': class '{class}' has {count} observations, need at least {folds}")]
    Stratification { dataset: String, class: String, count: usize, folds: usize },

    #[error("missing cell at method {method}, dataset {dataset}")]
    MissingCell { method: usize, dataset: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
