use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(&'static str),

    #[error("row {row} out of range for a subarray with {n_rows} rows")]
    RowOutOfRange { row: usize, n_rows: usize },

    #[error("length mismatch: expected {expected} columns, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("geometry mismatch: expected {expected} columns, found {found}")]
    GeometryMismatch { expected: usize, found: usize },

    #[error("calibration table required in calibrated mode")]
    MissingCalibration,

    #[error("row allocator exhausted: {needed} more rows needed")]
    Capacity { needed: usize },
}
