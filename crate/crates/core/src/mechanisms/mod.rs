//! Stateful oracle sessions answering adaptively chosen statistical queries.
//!
//! A session owns its dataset(s), RNG stream, budget ledger and transcript.
//! Analysts talk to it only through [`QueryOracle`], which never exposes data.

mod config;
mod noise;
mod pmw;
mod rounds;
mod session;
mod sparse;

use thiserror::Error;

use crate::domain::{Answer, DomainError, Query, Transcript, Universe};
use crate::privacy::{PrivacyError, PrivacyParams};

pub use config::{Calibration, MechanismKind, OracleConfig};
pub use noise::sample_laplace;
pub use rounds::SplitPlan;
pub use session::{open_session, OracleSession};

/// Why a session stopped accepting queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltReason {
    FiringBudget,
    HardUpdateBudget,
    RoundsExhausted,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("invalid config field {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("session halted ({0:?})")]
    SessionHalted(HaltReason),
    #[error("query budget of {m} queries reached")]
    QueryBudgetExceeded { m: usize },
    #[error("sparse-vector firing budget exhausted")]
    FiringBudgetExhausted,
    #[error("hard-update cap of {cap} reached")]
    HardUpdateBudgetExhausted { cap: u64 },
    #[error("dataset of {actual} points is below the required {required:.1} ({formula})")]
    DatasetTooSmall {
        required: f64,
        actual: usize,
        formula: &'static str,
    },
    #[error("universe {0:?} cannot be tabulated")]
    UniverseNotTabulatable(Universe),
    #[error("sparse-vector sessions need a guess with every query")]
    GuessRequired,
    #[error("only sparse-vector sessions accept guesses")]
    GuessNotAccepted,
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
}

/// Anything that answers statistical queries one at a time.
pub trait QueryOracle {
    fn answer(&mut self, query: &Query) -> Result<Answer, MechanismError>;

    fn transcript(&self) -> &Transcript;

    /// Composed privacy spent so far.
    fn spent(&self) -> PrivacyParams;
}
