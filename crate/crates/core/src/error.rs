use std::path::PathBuf;

use chrono::NaiveDate;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: date {date} does not follow previous date {previous}")]
    DateOrder {
        line: u64,
        date: NaiveDate,
        previous: NaiveDate,
    },

    #[error("line {line}: close {close} must be positive")]
    NonPositiveClose { line: u64, close: f64 },

    #[error("split of {len} points at fraction {fraction} leaves an empty {side} partition")]
    DegenerateSplit {
        len: usize,
        fraction: f64,
        side: &'static str,
    },

    #[error("training closes have zero range (all equal to {0})")]
    ZeroRange(f64),

    #[error("start index {start} needs {window} points of history")]
    InsufficientHistory { start: usize, window: usize },

    #[error("horizon {horizon} from index {start} overruns series of length {len} (at most {max} steps available)")]
    HorizonOverrun {
        start: usize,
        horizon: usize,
        len: usize,
        max: usize,
    },

    #[error("horizon must be at least 1")]
    ZeroHorizon,

    #[error("no prediction records")]
    EmptyRecords,

    #[error("actual price on {date} is {actual}; must be positive")]
    NonPositiveActual { date: NaiveDate, actual: f64 },

    #[error("{source_name}: {message}")]
    DateMismatch { source_name: String, message: String },

    #[error("unsupported model format_version {found} (supported: {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("corrupted model file: {0}")]
    Corrupted(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
