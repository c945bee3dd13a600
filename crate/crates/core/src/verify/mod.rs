//! Exact numeric oracles for binomial moments and tails, closed-form
//! concentration bounds, and Monte Carlo transfer checks.
//!
//! Exact binomial tails are computed by summation and used as independent
//! oracles wherever a bound is compared against something.

mod binomial;
mod bounds;
mod checks;
mod moments;
mod trial;

use thiserror::Error;

use crate::analysts::AnalystError;
use crate::domain::DomainError;
use crate::mechanisms::MechanismError;
use crate::privacy::PrivacyError;

pub use binomial::{
    acceptance_limit, binomial_tail_ge, binomial_tail_gt, ACCEPTANCE_ALPHA, BINOMIAL_CAP,
};
pub use bounds::{chernoff_mult_bound, hoeffding_bound, mcdiarmid_bound};
pub use checks::{
    bad_event_monitor, expectation_gap_check, transfer_check, BadEventReport, GapReport,
    TransferReport,
};
pub use moments::{
    binomial_moment, check_bernoulli_domination, check_moment_upper_bound, markov_moment_tail,
    BoundedLaw, Condition, DominationReport, MarkovTail, MomentBoundCheck, MomentSpec,
    LOG_LOG_READING, MOMENT_REL_TOL,
};
pub use trial::{
    run_trial, run_trials, ConstantFactory, ConstantOracle, OracleFactory, TrialOutcome, TrialSpec,
    Unscaled,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("n = {n} exceeds the exact-summation cap {cap}")]
    TooLarge { n: u64, cap: u64 },
    #[error("condition violated: {name} ({detail})")]
    ConditionViolated { name: &'static str, detail: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Analyst(#[from] AnalystError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
}
