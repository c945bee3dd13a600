//! One seeded (dataset, session, strategy) execution and its measurements.

use rayon::prelude::*;
use serde::Serialize;

use super::VerifyError;
use crate::analysts::{default_truncation, run_analyst, Scoring, StrategySpec};
use crate::domain::rng::{child_seed, stream_rng};
use crate::domain::{
    empirical_mean, sample_dataset, Answer, Dataset, Point, Population, Query, Transcript,
    TranscriptEntry,
};
use crate::mechanisms::{open_session, MechanismError, OracleConfig, QueryOracle};
use crate::privacy::PrivacyParams;

/// Opens a fresh oracle over a dataset. Shared across worker threads.
pub trait OracleFactory: Sync {
    fn label(&self) -> String;
    fn open(&self, data: Dataset, seed: u64)
        -> Result<Box<dyn QueryOracle + Send>, MechanismError>;
}

impl OracleFactory for OracleConfig {
    fn label(&self) -> String {
        self.mechanism.to_string()
    }

    fn open(
        &self,
        data: Dataset,
        seed: u64,
    ) -> Result<Box<dyn QueryOracle + Send>, MechanismError> {
        Ok(Box::new(open_session(self.clone(), data, seed)?))
    }
}

/// Factory for [`ConstantOracle`]s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantFactory(pub f64);

impl OracleFactory for ConstantFactory {
    fn label(&self) -> String {
        format!("constant({})", self.0)
    }

    fn open(
        &self,
        _data: Dataset,
        _seed: u64,
    ) -> Result<Box<dyn QueryOracle + Send>, MechanismError> {
        Ok(Box::new(ConstantOracle::new(self.0)))
    }
}

/// Answers every query with the same value and never looks at data.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    value: f64,
    transcript: Transcript,
}

impl ConstantOracle {
    pub fn new(value: f64) -> Self {
        ConstantOracle {
            value,
            transcript: Transcript::new(usize::MAX),
        }
    }
}

impl QueryOracle for ConstantOracle {
    fn answer(&mut self, query: &Query) -> Result<Answer, MechanismError> {
        let answer = Answer::Value(self.value);
        self.transcript.push(TranscriptEntry {
            query_id: query.id(),
            answer,
            empirical: self.value,
            true_expectation: None,
            note: "constant".into(),
        })?;
        Ok(answer)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    fn spent(&self) -> PrivacyParams {
        PrivacyParams::ZERO
    }
}

/// Everything fixed across the trials of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub population: Population,
    pub n: usize,
    pub strategy: StrategySpec,
    /// Monte Carlo draws for population values that have no exact form.
    pub mc_trials: usize,
    /// Score every answer against the population, not just the final one.
    pub score_all: bool,
    /// Also evaluate the final query on an independent dataset of size `n`.
    pub fresh_baseline: bool,
}

impl TrialSpec {
    pub fn new(population: Population, n: usize, strategy: StrategySpec) -> Self {
        TrialSpec {
            population,
            n,
            strategy,
            mc_trials: 2000,
            score_all: false,
            fresh_baseline: false,
        }
    }
}

/// Sign-aggregation values mapped back to the scale of `<u, x>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Unscaled {
    pub reported: Option<f64>,
    pub true_value: f64,
    pub true_std_error: f64,
    /// Mean of the untruncated projection `<u, x>` over the dataset.
    pub empirical_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    /// RNG stream id of the trial; equal to the trial index.
    pub stream: u64,
    pub answered: usize,
    /// The analyst finished without a refusal.
    pub completed: bool,
    pub halted: bool,
    pub error: Option<String>,
    /// Oracle answer to the final query; `None` for Bottom.
    pub final_reported: Option<f64>,
    pub final_true: Option<f64>,
    pub final_true_std_error: Option<f64>,
    /// Final query averaged over the whole dataset handed to the session.
    pub final_empirical: Option<f64>,
    pub fresh_empirical: Option<f64>,
    /// Answers scored against the population and how many missed by more than `tau`.
    pub scored_answers: usize,
    pub answer_errors: Vec<f64>,
    pub rounds_detected: u32,
    pub epsilon_spent: f64,
    pub delta_spent: f64,
    pub unscaled: Option<Unscaled>,
}

impl TrialOutcome {
    /// `|reported - P[phi]|` for the final query.
    pub fn final_gap(&self) -> Option<f64> {
        Some((self.final_reported? - self.final_true?).abs())
    }

    /// Whether `|P[phi] - E_S[phi]| > tau` for the final query.
    pub fn violation(&self, tau: f64) -> Option<bool> {
        Some((self.final_true? - self.final_empirical?).abs() > tau)
    }

    pub fn baseline_violation(&self, tau: f64) -> Option<bool> {
        Some((self.final_true? - self.fresh_empirical?).abs() > tau)
    }

    /// Number of scored answers with `|answer - P[phi]| > tau`.
    pub fn answer_violations(&self, tau: f64) -> usize {
        self.answer_errors.iter().filter(|e| **e > tau).count()
    }
}

/// Runs trial `trial` on RNG stream `trial` of `seed`.
pub fn run_trial(
    factory: &dyn OracleFactory,
    spec: &TrialSpec,
    seed: u64,
    trial: u64,
) -> Result<TrialOutcome, VerifyError> {
    let mut rng = stream_rng(seed, trial);
    let data_seed = child_seed(&mut rng);
    let session_seed = child_seed(&mut rng);
    let analyst_seed = child_seed(&mut rng);
    let score_seed = child_seed(&mut rng);
    let fresh_seed = child_seed(&mut rng);

    let data = sample_dataset(&spec.population, spec.n, data_seed)?;
    let mut oracle = factory.open(data.clone(), session_seed)?;
    let mut analyst = spec
        .strategy
        .build(spec.population.universe(), spec.n, analyst_seed)?;
    let scoring = if spec.score_all {
        Scoring::all(spec.mc_trials, score_seed)
    } else {
        Scoring::final_only(spec.mc_trials, score_seed)
    };
    let run = run_analyst(analyst.as_mut(), oracle.as_mut(), &spec.population, scoring)?;
    let spent = oracle.spent();

    let last = run.history.last();
    let final_empirical = last.map(|e| empirical_mean(&data, &e.query)).transpose()?;
    let fresh_empirical = match (last, spec.fresh_baseline) {
        (Some(e), true) => Some(empirical_mean(
            &sample_dataset(&spec.population, spec.n, fresh_seed)?,
            &e.query,
        )?),
        _ => None,
    };
    let answer_errors: Vec<f64> = run
        .transcript
        .entries()
        .iter()
        .filter_map(|e| Some((e.answer.value()? - e.true_expectation?).abs()))
        .collect();
    let scored_answers = run
        .transcript
        .entries()
        .iter()
        .filter(|e| e.true_expectation.is_some())
        .count();

    let unscaled = match (&spec.strategy, &run.final_truth) {
        (StrategySpec::SignAggregation { d, truncation }, Some(truth))
            if run.history.len() == *d as usize + 1 =>
        {
            let b = truncation.unwrap_or_else(|| default_truncation(*d, spec.n));
            let scale = 1.0 / (*d as f64).sqrt();
            let u: Vec<f64> = run.history[..*d as usize]
                .iter()
                .map(|e| {
                    if e.answer.value().unwrap_or(0.5) >= 0.5 {
                        scale
                    } else {
                        -scale
                    }
                })
                .collect();
            let raw: f64 = data
                .iter()
                .map(|p| match p {
                    Point::Real(x) => x.iter().zip(&u).map(|(a, w)| a * w).sum::<f64>(),
                    Point::Discrete(_) => f64::NAN,
                })
                .sum::<f64>()
                / data.len() as f64;
            let unscale = |a: f64| (a - 0.5) * 2.0 * b;
            Some(Unscaled {
                reported: last.and_then(|e| e.answer.value()).map(unscale),
                true_value: unscale(truth.estimate),
                true_std_error: truth.std_error * 2.0 * b,
                empirical_raw: raw,
            })
        }
        _ => None,
    };

    Ok(TrialOutcome {
        trial,
        stream: trial,
        answered: run.history.len(),
        completed: run.completed(),
        halted: run.transcript.halted(),
        error: run.error.as_ref().map(|e| e.to_string()),
        final_reported: last.and_then(|e| e.answer.value()),
        final_true: run.final_truth.map(|t| t.estimate),
        final_true_std_error: run.final_truth.map(|t| t.std_error),
        final_empirical,
        fresh_empirical,
        scored_answers,
        answer_errors,
        rounds_detected: run.transcript.rounds_detected(),
        epsilon_spent: spent.epsilon,
        delta_spent: spent.delta,
        unscaled,
    })
}

/// Runs trials `0..trials` in parallel; results come back in trial order.
pub fn run_trials(
    factory: &dyn OracleFactory,
    spec: &TrialSpec,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialOutcome>, VerifyError> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(factory, spec, seed, t))
        .collect()
}
