//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Error, Debug)]
pub enum PhmError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown escalator id {0}")]
    UnknownEscalator(u32),

    #[error("sensor point {0} out of range 1..=8")]
    SensorOutOfRange(u8),

    #[error("frequency band [{lo_khz}, {hi_khz}) kHz selects no spectrum bins")]
    EmptyBand { lo_khz: f64, hi_khz: f64 },

    #[error("frequency band [{lo_khz}, {hi_khz}) kHz outside [0, 12.8] kHz")]
    BandOutOfRange { lo_khz: f64, hi_khz: f64 },

    #[error("no exceedance area for sensor point {0}; enable weight renormalization or supply all 8 sensors")]
    MissingSensor(u8),

    #[error("no working minutes in service-day profile for escalator {escalator} on {date}")]
    NoWorkingMinutes {
        escalator: u32,
        date: chrono::NaiveDate,
    },

    #[error("duplicate minute record for escalator {escalator} at {timestamp}")]
    DuplicateMinute {
        escalator: u32,
        timestamp: chrono::DateTime<chrono::Utc>,
    },

    #[error("curve fit needs at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("lifetime health index must be positive, got {0}")]
    NonPositiveLhi(f64),

    #[error("invalid quarter: {0}")]
    InvalidQuarter(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema violation in {path}: {reason}")]
    SchemaViolation { path: String, reason: String },

    #[error("store manifest out of sync: {0}")]
    ManifestMismatch(String),

    #[error("could not acquire store write lock at {0}")]
    LockTimeout(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PhmError>;
