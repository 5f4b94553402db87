use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty action-value vector")]
    EmptyValues,

    #[error("non-finite action value {value}")]
    NonFiniteValue { value: f64 },

    #[error("invalid parameter {name}={value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("schedule index must be >= 1 (got {t})")]
    InvalidScheduleIndex { t: u64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index out of range: {what}={index} (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid grid map: {0}")]
    InvalidMap(String),

    #[error("threshold undefined: denominator {denominator} <= 0")]
    ThresholdUndefined { denominator: f64 },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("refusing to overwrite {path}; pass force=true to allow")]
    WouldOverwrite { path: PathBuf },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed snapshot file: {0}")]
    MalformedSnapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
