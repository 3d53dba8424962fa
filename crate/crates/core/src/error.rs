use thiserror::Error;

use crate::metamodel::ValueKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("instance `{instance}` has no entry at `{path}`")]
    UnknownEntry { instance: String, path: String },
    #[error("instance id `{0}` is already in use")]
    DuplicateInstance(String),
    #[error("expected a {expected} value, found {found}")]
    KindMismatch { expected: ValueKind, found: String },
    #[error("value {value} outside the valid range [{lower}, {upper}]")]
    RangeViolation { value: f64, lower: f64, upper: f64 },
    #[error("storage of this entry is not allowed at location `{0}`")]
    LocationDenied(String),
    #[error("invalid value range: {0}")]
    InvalidRange(String),
    #[error("expiry precedes the value's timestamp")]
    ExpiryBeforeTimestamp,
    #[error("time range is empty: from is after to")]
    InvalidTimeRange,
    #[error("forecast has no points")]
    EmptyForecast,
    #[error("forecast points must have strictly increasing timestamps")]
    NonMonotoneForecast,
    #[error("forecast source id is empty")]
    EmptyForecastSource,
    #[error("category of type `{found}` cannot be read as `{expected}`")]
    SourceTypeMismatch { expected: String, found: String },
    #[error("document does not match `{type_name}`: {message}")]
    Schema { type_name: String, message: String },
    #[error("malformed component tree: {0}")]
    MalformedTree(String),
    #[error("journal I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal encoding: {0}")]
    Encoding(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
