use thiserror::Error;

use super::Universe;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid universe: {0}")]
    InvalidUniverse(String),
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
    #[error("dataset must contain at least one point")]
    EmptyDataset,
    #[error("point {index} does not lie in universe {universe:?}")]
    PointOutsideUniverse { index: usize, universe: Universe },
    #[error("universe mismatch: expected {expected:?}, found {found:?}")]
    UniverseMismatch { expected: Universe, found: Universe },
    #[error("query value {value} at point {point} is outside [0, 1]")]
    QueryOutOfRange { value: f64, point: String },
    #[error("query table has length {found}, universe has {expected} points")]
    TableLength { expected: u64, found: usize },
    #[error("universe {0:?} cannot be tabulated")]
    NotTabulatable(Universe),
    #[error("universe of size {size} exceeds the tabulation cap of {cap}")]
    UniverseTooLarge { size: u64, cap: u64 },
    #[error("exact expectation needs enumerating {size} points (cap {cap})")]
    EnumerationTooLarge { size: u64, cap: u64 },
    #[error("expectations over a Gaussian population require Monte Carlo")]
    GaussianNeedsMonteCarlo,
    #[error("Monte Carlo needs at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
    #[error("transcript is closed: {0}")]
    TranscriptClosed(&'static str),
    #[error("csv: {0}")]
    Csv(String),
}
