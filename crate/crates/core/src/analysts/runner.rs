use serde::Serialize;

use super::{Analyst, AnalystError, Exchange, SignAggregation};
use crate::domain::rng::mix64;
use crate::domain::{
    monte_carlo_expectation, true_expectation, DomainError, McEstimate, Population, Query,
    Transcript, Universe,
};
use crate::mechanisms::{MechanismError, QueryOracle};

/// Feeds the analyst's queries to the oracle until the analyst stops or the
/// oracle refuses. Returns the exchanges and the refusal, if any.
pub fn drive(
    analyst: &mut dyn Analyst,
    oracle: &mut dyn QueryOracle,
) -> (Vec<Exchange>, Option<MechanismError>) {
    let mut history = Vec::new();
    while let Some(query) = analyst.next_query(&history) {
        match oracle.answer(&query) {
            Ok(answer) => history.push(Exchange { query, answer }),
            Err(e) => return (history, Some(e)),
        }
    }
    (history, None)
}

/// How transcript entries get their population expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scoring {
    /// Score only the last answered query.
    pub final_only: bool,
    /// Draws per Monte Carlo estimate, used where no exact value exists.
    pub mc_trials: usize,
    pub seed: u64,
}

impl Scoring {
    pub fn all(mc_trials: usize, seed: u64) -> Self {
        Scoring {
            final_only: false,
            mc_trials,
            seed,
        }
    }

    pub fn final_only(mc_trials: usize, seed: u64) -> Self {
        Scoring {
            final_only: true,
            mc_trials,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalystRun {
    pub transcript: Transcript,
    pub history: Vec<Exchange>,
    /// The refusal that ended the run early, if any.
    pub error: Option<MechanismError>,
    /// Population value of the last answered query (standard error 0 when exact).
    pub final_truth: Option<McEstimate>,
}

impl AnalystRun {
    pub fn final_query(&self) -> Option<&Query> {
        self.history.last().map(|e| &e.query)
    }

    pub fn completed(&self) -> bool {
        self.error.is_none()
    }
}

/// `P[q]`, exactly when the population allows it and by Monte Carlo otherwise.
pub fn population_value(
    pop: &Population,
    query: &Query,
    mc_trials: usize,
    seed: u64,
) -> Result<McEstimate, DomainError> {
    match true_expectation(pop, query) {
        Ok(v) => Ok(McEstimate {
            estimate: v,
            std_error: 0.0,
        }),
        Err(DomainError::GaussianNeedsMonteCarlo | DomainError::EnumerationTooLarge { .. }) => {
            monte_carlo_expectation(pop, query, mc_trials, seed)
        }
        Err(e) => Err(e),
    }
}

/// Runs a strategy against a fresh session and scores the transcript.
pub fn run_analyst(
    analyst: &mut dyn Analyst,
    oracle: &mut dyn QueryOracle,
    pop: &Population,
    scoring: Scoring,
) -> Result<AnalystRun, AnalystError> {
    let used = oracle.transcript().len();
    if used != 0 {
        return Err(AnalystError::SessionNotFresh(used));
    }
    let (history, error) = drive(analyst, oracle);
    let mut transcript = oracle.transcript().clone();
    if error.is_some() && !transcript.halted() {
        transcript.halt();
    }
    let first = if scoring.final_only {
        history.len().saturating_sub(1)
    } else {
        0
    };
    let mut final_truth = None;
    for i in first..history.len() {
        let v = population_value(
            pop,
            &history[i].query,
            scoring.mc_trials,
            mix64(scoring.seed ^ i as u64),
        )?;
        transcript.entries_mut()[i].true_expectation = Some(v.estimate);
        if i + 1 == history.len() {
            final_truth = Some(v);
        }
    }
    Ok(AnalystRun {
        transcript,
        history,
        error,
        final_truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignAggregationReport {
    /// Oracle answer to the rescaled final query.
    pub reported: f64,
    /// `reported` mapped back to the scale of `<u, x>`.
    pub reported_unscaled: f64,
    /// Monte Carlo estimate of the rescaled final query under the population.
    pub truth: McEstimate,
    pub truth_unscaled: McEstimate,
    pub truncation: f64,
    #[serde(skip)]
    pub direction: Vec<f64>,
}

/// Runs the sign-aggregation attack with truncation `b` and returns the
/// reported and true values of its final query.
pub fn sign_aggregation_attack(
    d: u32,
    b: f64,
    oracle: &mut dyn QueryOracle,
    pop: &Population,
    mc_trials: usize,
    seed: u64,
) -> Result<SignAggregationReport, AnalystError> {
    let universe = pop.universe();
    if !matches!(pop, Population::StandardGaussianProduct { .. })
        || universe != (Universe::RealVectors { dim: d })
    {
        return Err(AnalystError::WrongUniverse {
            strategy: "sign-aggregation",
            universe,
        });
    }
    let mut analyst = SignAggregation::new(universe, d, b)?;
    let (history, error) = drive(&mut analyst, oracle);
    if let Some(e) = error {
        return Err(e.into());
    }
    let last = history.last().expect("d + 1 exchanges");
    let reported = last.answer.value().unwrap_or(0.5);
    let truth = monte_carlo_expectation(pop, &last.query, mc_trials, seed)?;
    let scale = 2.0 * b;
    Ok(SignAggregationReport {
        reported,
        reported_unscaled: analyst.unscale(reported),
        truth,
        truth_unscaled: McEstimate {
            estimate: analyst.unscale(truth.estimate),
            std_error: truth.std_error * scale,
        },
        truncation: b,
        direction: analyst.direction().expect("final query asked").to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysts::{NonAdaptiveRandom, StrategySpec};
    use crate::domain::{empirical_mean, sample_dataset, Answer};
    use crate::mechanisms::{open_session, MechanismKind, OracleConfig};

    #[test]
    fn non_adaptive_against_naive() {
        let pop = Population::uniform(Universe::indexed(32).unwrap()).unwrap();
        let data = sample_dataset(&pop, 50, 1).unwrap();
        let mut s = open_session(OracleConfig::new(MechanismKind::Naive), data.clone(), 2).unwrap();
        let mut a = NonAdaptiveRandom::new(pop.universe(), 5, 3);
        let run = run_analyst(&mut a, &mut s, &pop, Scoring::all(100, 4)).unwrap();
        assert_eq!(run.transcript.len(), 5);
        for (e, x) in run.transcript.entries().iter().zip(&run.history) {
            assert_eq!(
                e.answer,
                Answer::Value(empirical_mean(&data, &x.query).unwrap())
            );
            assert!(e.true_expectation.is_some());
        }
        assert!(run.completed());
    }

    #[test]
    fn used_sessions_are_rejected() {
        let pop = Population::uniform(Universe::indexed(4).unwrap()).unwrap();
        let data = sample_dataset(&pop, 5, 1).unwrap();
        let mut s = open_session(OracleConfig::new(MechanismKind::Naive), data, 2).unwrap();
        let mut a = NonAdaptiveRandom::new(pop.universe(), 1, 3);
        run_analyst(&mut a, &mut s, &pop, Scoring::all(100, 4)).unwrap();
        let mut b = NonAdaptiveRandom::new(pop.universe(), 1, 3);
        assert!(matches!(
            run_analyst(&mut b, &mut s, &pop, Scoring::all(100, 4)),
            Err(AnalystError::SessionNotFresh(1))
        ));
    }

    #[test]
    fn refusals_mark_transcript_halted() {
        let pop = Population::uniform(Universe::indexed(4).unwrap()).unwrap();
        let data = sample_dataset(&pop, 5, 1).unwrap();
        let mut cfg = OracleConfig::new(MechanismKind::Naive);
        cfg.m = 3;
        let mut s = open_session(cfg, data, 2).unwrap();
        let mut a = NonAdaptiveRandom::new(pop.universe(), 10, 3);
        let run = run_analyst(&mut a, &mut s, &pop, Scoring::final_only(100, 4)).unwrap();
        assert_eq!(run.transcript.len(), 3);
        assert!(run.transcript.halted());
        assert_eq!(
            run.error,
            Some(MechanismError::QueryBudgetExceeded { m: 3 })
        );
        assert!(run.transcript.entries()[0].true_expectation.is_none());
        assert!(run.transcript.entries()[2].true_expectation.is_some());
    }

    #[test]
    fn sign_aggregation_small_case() {
        let pop = Population::standard_gaussian(20).unwrap();
        let data = sample_dataset(&pop, 20, 1).unwrap();
        let mut s = open_session(OracleConfig::new(MechanismKind::Naive), data, 2).unwrap();
        let rep = sign_aggregation_attack(20, 8.0, &mut s, &pop, 2000, 3).unwrap();
        assert_eq!(s.transcript().len(), 21);
        assert_eq!(rep.direction.len(), 20);
        // Expected reported value sqrt(2 d / (pi n)) = 0.80; the population value is 0.
        assert!(rep.reported_unscaled > 0.0);
        assert!(rep.truth_unscaled.estimate.abs() < 4.0 * rep.truth_unscaled.std_error + 1e-12);
    }

    #[test]
    fn spec_counts() {
        assert_eq!(
            StrategySpec::SignAggregation {
                d: 7,
                truncation: None
            }
            .query_count(),
            8
        );
        assert_eq!(
            StrategySpec::RoundStructured {
                r: 3,
                per_round: 10
            }
            .query_count(),
            40
        );
    }
}
