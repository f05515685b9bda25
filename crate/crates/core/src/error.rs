//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid selector: {0}")]
    InvalidSelector(String),
    #[error("switch mismatch: {0}")]
    SwitchMismatch(String),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("empty category: {0}")]
    EmptyCategory(String),
    #[error("non-finite value encountered: {0}")]
    NonFiniteEncountered(String),
    #[error("window too long: {0}")]
    WindowTooLong(String),
    #[error("mismatched axes: {0}")]
    MismatchedAxes(String),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
