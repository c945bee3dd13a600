use super::config::{Calibration, MechanismKind, OracleConfig};
use super::noise::sample_laplace;
use super::pmw::{PmwState, PmwStep};
use super::rounds::{RoundsState, SplitPlan};
use super::sparse::SparseCore;
use super::{HaltReason, MechanismError, QueryOracle};
use crate::domain::rng::{stream_rng, SimRng};
use crate::domain::{empirical_mean, Answer, Dataset, Query, Transcript, TranscriptEntry};
use crate::privacy::{BudgetLedger, PrivacyParams};

#[derive(Debug, Clone)]
enum State {
    Naive(Dataset),
    Laplace(Dataset),
    Pmw(PmwState),
    Sparse(SparseCore),
    Rounds(RoundsState),
}

/// One oracle instance: owns its data, noise stream, ledger and transcript.
/// Sequential and single-owner; it may move between threads.
#[derive(Debug, Clone)]
pub struct OracleSession {
    config: OracleConfig,
    calibration: Calibration,
    rng: SimRng,
    transcript: Transcript,
    ledger: BudgetLedger,
    state: State,
    halt: Option<HaltReason>,
}

/// Opens a session over `data`. All randomness (noise, the random split of
/// the round-detecting oracle) comes from stream 0 of `seed`.
pub fn open_session(
    config: OracleConfig,
    data: Dataset,
    seed: u64,
) -> Result<OracleSession, MechanismError> {
    config.validate()?;
    let mut rng = stream_rng(seed, 0);
    let universe = data.universe();
    let n = data.len();
    let (calibration, state) = match config.mechanism {
        MechanismKind::Naive => (config.calibrate(n, None), State::Naive(data)),
        MechanismKind::Laplace => (config.calibrate(n, None), State::Laplace(data)),
        MechanismKind::Pmw => {
            if !universe.is_discrete() || universe.tabulation_len().is_err() {
                return Err(MechanismError::UniverseNotTabulatable(universe));
            }
            let cal = config.calibrate(n, universe.ln_size());
            let state = PmwState::new(data, &cal)?;
            (cal, State::Pmw(state))
        }
        MechanismKind::SparseVector => {
            let cal = config.calibrate(n, None);
            let core = SparseCore::new(data, &cal, config.r, &mut rng);
            (cal, State::Sparse(core))
        }
        MechanismKind::EffectiveRounds => {
            let required = SplitPlan::required_input(config.r, config.tau, config.beta);
            if (n as f64) < required {
                return Err(MechanismError::DatasetTooSmall {
                    required,
                    actual: n,
                    formula: "1156 r ln(12/beta)/tau^2",
                });
            }
            let plan = SplitPlan::new(n, config.r, config.tau, config.beta)?;
            let mut cal = None;
            let state = RoundsState::new(
                &data,
                plan,
                |holdout| {
                    let c = config.calibrate(holdout, None);
                    cal = Some(c.clone());
                    c
                },
                config.r,
                &mut rng,
            )?;
            (cal.expect("calibrated during split"), State::Rounds(state))
        }
    };
    Ok(OracleSession {
        ledger: BudgetLedger::new(config.policy())?,
        transcript: Transcript::new(config.m),
        config,
        calibration,
        rng,
        state,
        halt: None,
    })
}

impl OracleSession {
    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn halt_reason(&self) -> Option<HaltReason> {
        self.halt
    }

    pub fn is_halted(&self) -> bool {
        self.halt.is_some()
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Current synthetic distribution of a PMW session.
    pub fn pmw_weights(&self) -> Option<&[f64]> {
        match &self.state {
            State::Pmw(p) => Some(p.weights()),
            _ => None,
        }
    }

    pub fn hard_updates(&self) -> Option<u64> {
        match &self.state {
            State::Pmw(p) => Some(p.hard_updates()),
            _ => None,
        }
    }

    pub fn firings_left(&self) -> Option<u32> {
        match &self.state {
            State::Sparse(s) => Some(s.firings_left()),
            State::Rounds(r) => Some(r.sparse().firings_left()),
            _ => None,
        }
    }

    /// One-based index `c` of the estimation set in use by the round-detecting oracle.
    pub fn current_set(&self) -> Option<usize> {
        match &self.state {
            State::Rounds(r) => Some(r.sparse().firings_left() as usize)
                .map(|left| self.config.r as usize - left + 1),
            _ => None,
        }
    }

    /// Sizes of the estimation sets and the holdout, for the round-detecting oracle.
    pub fn split_sizes(&self) -> Option<(Vec<usize>, usize)> {
        match &self.state {
            State::Rounds(r) => Some((r.estimation_sizes(), r.sparse().len())),
            _ => None,
        }
    }

    fn admit(&self) -> Result<(), MechanismError> {
        match self.halt {
            Some(HaltReason::FiringBudget) => return Err(MechanismError::FiringBudgetExhausted),
            Some(reason) => return Err(MechanismError::SessionHalted(reason)),
            None => {}
        }
        if self.transcript.len() >= self.config.m {
            return Err(MechanismError::QueryBudgetExceeded { m: self.config.m });
        }
        Ok(())
    }

    fn charge(&mut self) -> Result<(), MechanismError> {
        self.ledger.charge(PrivacyParams {
            epsilon: self.calibration.per_charge_epsilon,
            delta: 0.0,
        })?;
        Ok(())
    }

    fn finish(
        &mut self,
        query: &Query,
        answer: Answer,
        empirical: f64,
        note: String,
    ) -> Result<Answer, MechanismError> {
        let answer = match answer {
            Answer::Value(v) if self.config.clamp => Answer::Value(v.clamp(0.0, 1.0)),
            a => a,
        };
        self.transcript.push(TranscriptEntry {
            query_id: query.id(),
            answer,
            empirical,
            true_expectation: None,
            note,
        })?;
        Ok(answer)
    }

    /// Answers a query with a guess of its value. Sparse-vector sessions only.
    pub fn answer_with_guess(
        &mut self,
        query: &Query,
        guess: f64,
    ) -> Result<Answer, MechanismError> {
        self.admit()?;
        let State::Sparse(core) = &mut self.state else {
            return Err(MechanismError::GuessNotAccepted);
        };
        let out = core.test(&mut self.rng, query, guess)?;
        let left = core.firings_left();
        let note = match out.answer {
            Answer::Bottom => "bottom".to_string(),
            Answer::Value(_) => format!("fired, {left} left"),
        };
        if !out.answer.is_bottom() {
            self.charge()?;
        }
        let answer = self.finish(query, out.answer, out.empirical, note)?;
        if left == 0 {
            self.halt = Some(HaltReason::FiringBudget);
            self.transcript.halt();
        }
        Ok(answer)
    }

    fn answer_inner(&mut self, query: &Query) -> Result<Answer, MechanismError> {
        self.admit()?;
        match &mut self.state {
            State::Naive(data) => {
                let e = empirical_mean(data, query)?;
                self.finish(query, Answer::Value(e), e, "empirical".into())
            }
            State::Laplace(data) => {
                let e = empirical_mean(data, query)?;
                let sigma = self.calibration.laplace_sigma.expect("laplace calibration");
                let v = e + sample_laplace(&mut self.rng, sigma);
                self.charge()?;
                self.finish(query, Answer::Value(v), e, "laplace".into())
            }
            State::Pmw(pmw) => {
                let step = match pmw.step(&mut self.rng, query) {
                    Ok(s) => s,
                    Err(e) => {
                        if matches!(e, MechanismError::HardUpdateBudgetExhausted { .. }) {
                            self.halt = Some(HaltReason::HardUpdateBudget);
                            self.transcript.halt();
                        }
                        return Err(e);
                    }
                };
                let (answer, empirical, note) = match step {
                    PmwStep::Lazy { answer, empirical } => (answer, empirical, "lazy".to_string()),
                    PmwStep::Hard { answer, empirical } => (
                        answer,
                        empirical,
                        format!("hard update {}", pmw.hard_updates()),
                    ),
                };
                self.charge()?;
                self.finish(query, Answer::Value(answer), empirical, note)
            }
            State::Sparse(_) => Err(MechanismError::GuessRequired),
            State::Rounds(rounds) => {
                let step = rounds.step(&mut self.rng, query)?;
                let exhausted = rounds.exhausted();
                let note = if step.fired {
                    format!("fired on holdout, S{} discarded", step.set)
                } else {
                    format!("estimate S{}", step.set)
                };
                if step.fired {
                    self.charge()?;
                    self.transcript.record_round();
                }
                let answer =
                    self.finish(query, Answer::Value(step.answer), step.empirical, note)?;
                if exhausted {
                    self.halt = Some(HaltReason::RoundsExhausted);
                    self.transcript.halt();
                }
                Ok(answer)
            }
        }
    }
}

impl QueryOracle for OracleSession {
    fn answer(&mut self, query: &Query) -> Result<Answer, MechanismError> {
        self.answer_inner(query)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    fn spent(&self) -> PrivacyParams {
        self.ledger.total()
    }
}
