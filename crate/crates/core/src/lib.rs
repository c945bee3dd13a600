//! Adaptive statistical-query answering laboratory.
//!
//! The crate answers adaptively chosen statistical queries against a sampled
//! dataset through several oracles (the naive empirical average, Laplace noise
//! addition, private multiplicative weights, numeric sparse vector and a
//! round-detecting reuse scheme), drives them with adversarial analysts, and
//! checks the resulting generalization behaviour numerically.
//!
//! Module map:
//!
//! - [`domain`]: universes, populations, datasets, queries, transcripts and
//!   seeded sampling.
//! - [`privacy`]: privacy parameter algebra, budget ledger and sample-size
//!   calculators.
//! - [`mechanisms`]: stateful oracle sessions.
//! - [`analysts`]: adaptive query strategies, including the overfitting attacks.
//! - [`verify`]: exact moment/tail oracles and Monte Carlo generalization checks.
//! - [`harness`]: experiment configuration, orchestration and the CLI.
//!
//! All logarithms in formula evaluation are natural logarithms.

pub mod analysts;
pub mod domain;
pub mod harness;
pub mod mechanisms;
pub mod privacy;
pub mod verify;

pub use domain::{Answer, Dataset, Population, Query, QueryId, Transcript, Universe};
pub use mechanisms::{MechanismKind, OracleConfig, OracleSession, QueryOracle};
pub use privacy::PrivacyParams;

/// Version string recorded in experiment metadata.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
