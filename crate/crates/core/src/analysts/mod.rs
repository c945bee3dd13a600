//! Adaptive analysts. A strategy sees only the queries it asked and the
//! answers it got back; it never holds a dataset.

mod probe;
mod random;
mod rounds;
mod runner;
mod sign;

use serde::Serialize;
use thiserror::Error;

use crate::domain::{Answer, DomainError, Query, Universe};
use crate::mechanisms::MechanismError;

pub use probe::{ReconstructionProbe, Renormalization};
pub use random::NonAdaptiveRandom;
pub use rounds::RoundStructured;
pub use runner::{
    drive, population_value, run_analyst, sign_aggregation_attack, AnalystRun, Scoring,
    SignAggregationReport,
};
pub use sign::{default_truncation, SignAggregation};

/// One (query, answer) pair as the analyst saw it.
#[derive(Debug, Clone)]
pub struct Exchange {
    pub query: Query,
    pub answer: Answer,
}

/// A query-generating strategy. `history` holds every earlier exchange in
/// order; returning `None` ends the interaction.
pub trait Analyst: Send {
    fn next_query(&mut self, history: &[Exchange]) -> Option<Query>;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalystError {
    #[error("universe has {size} points; the strategy needs at least {need}")]
    UniverseTooSmall { size: u64, need: u64 },
    #[error("strategy {strategy} cannot run over {universe:?}")]
    WrongUniverse {
        strategy: &'static str,
        universe: Universe,
    },
    #[error("session already answered {0} queries; analysts need a fresh session")]
    SessionNotFresh(usize),
    #[error("invalid strategy parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// Declarative strategy choice, as read from experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategySpec {
    NonAdaptiveRandom {
        m: usize,
    },
    SignAggregation {
        d: u32,
        truncation: Option<f64>,
    },
    ReconstructionProbe {
        m_probe: usize,
        quantile: f64,
        renormalization: Renormalization,
    },
    RoundStructured {
        r: u32,
        per_round: usize,
    },
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::NonAdaptiveRandom { .. } => "non-adaptive-random",
            StrategySpec::SignAggregation { .. } => "sign-aggregation",
            StrategySpec::ReconstructionProbe { .. } => "reconstruction-probe",
            StrategySpec::RoundStructured { .. } => "round-structured",
        }
    }

    /// Number of queries the strategy will ask.
    pub fn query_count(&self) -> usize {
        match *self {
            StrategySpec::NonAdaptiveRandom { m } => m,
            StrategySpec::SignAggregation { d, .. } => d as usize + 1,
            StrategySpec::ReconstructionProbe { m_probe, .. } => m_probe + 1,
            StrategySpec::RoundStructured { r, per_round } => (r as usize + 1) * per_round,
        }
    }

    /// Builds a fresh strategy instance for a universe and dataset size `n`
    /// (`n` only matters for the default truncation of sign aggregation).
    pub fn build(
        &self,
        universe: Universe,
        n: usize,
        seed: u64,
    ) -> Result<Box<dyn Analyst>, AnalystError> {
        Ok(match *self {
            StrategySpec::NonAdaptiveRandom { m } => {
                Box::new(NonAdaptiveRandom::new(universe, m, seed))
            }
            StrategySpec::SignAggregation { d, truncation } => {
                let b = truncation.unwrap_or_else(|| default_truncation(d, n));
                Box::new(SignAggregation::new(universe, d, b)?)
            }
            StrategySpec::ReconstructionProbe {
                m_probe,
                quantile,
                renormalization,
            } => Box::new(ReconstructionProbe::new(
                universe,
                m_probe,
                quantile,
                renormalization,
                seed,
            )?),
            StrategySpec::RoundStructured { r, per_round } => {
                Box::new(RoundStructured::new(universe, r, per_round, seed)?)
            }
        })
    }
}
