use rand::seq::SliceRandom;
use serde::Serialize;

use super::sparse::{SparseCore, SparseOutcome};
use super::{Calibration, MechanismError};
use crate::domain::rng::SimRng;
use crate::domain::{empirical_mean, Answer, Dataset, Query};

/// How the round-detecting oracle partitions its input: `r` estimation sets
/// of `ceil(4 ln(12/beta) / tau^2)` points each, and the rest as the holdout
/// read only through sparse vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitPlan {
    pub estimation_size: usize,
    pub estimation_sets: u32,
    pub holdout_size: usize,
}

impl SplitPlan {
    pub fn new(n: usize, r: u32, tau: f64, beta: f64) -> Result<Self, MechanismError> {
        let estimation_size = (4.0 * (12.0 / beta).ln() / (tau * tau)).ceil() as usize;
        let used = estimation_size * r as usize;
        if used >= n {
            return Err(MechanismError::DatasetTooSmall {
                required: (used + 1) as f64,
                actual: n,
                formula: "r ceil(4 ln(12/beta)/tau^2) + 1",
            });
        }
        Ok(SplitPlan {
            estimation_size,
            estimation_sets: r,
            holdout_size: n - used,
        })
    }

    /// Smallest input the oracle accepts: `1156 r ln(12/beta) / tau^2`.
    pub fn required_input(r: u32, tau: f64, beta: f64) -> f64 {
        1156.0 * r as f64 * (12.0 / beta).ln() / (tau * tau)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RoundsState {
    pub(super) estimation: Vec<Dataset>,
    /// Zero-based index of the estimation set in use.
    current: usize,
    sparse: SparseCore,
}

pub(crate) struct RoundsStep {
    pub answer: f64,
    pub empirical: f64,
    pub fired: bool,
    /// One-based index of the estimation set that produced the guess.
    pub set: usize,
}

impl RoundsState {
    pub fn new(
        data: &Dataset,
        plan: SplitPlan,
        cal_for: impl FnOnce(usize) -> Calibration,
        r: u32,
        rng: &mut SimRng,
    ) -> Result<Self, MechanismError> {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(rng);
        let k = plan.estimation_size;
        let estimation = (0..plan.estimation_sets as usize)
            .map(|i| data.subset(&order[i * k..(i + 1) * k]))
            .collect::<Result<Vec<_>, _>>()?;
        let holdout = data.subset(&order[k * plan.estimation_sets as usize..])?;
        let cal = cal_for(holdout.len());
        let sparse = SparseCore::new(holdout, &cal, r, rng);
        Ok(RoundsState {
            estimation,
            current: 0,
            sparse,
        })
    }

    pub fn sparse(&self) -> &SparseCore {
        &self.sparse
    }

    pub fn estimation_sizes(&self) -> Vec<usize> {
        self.estimation.iter().map(Dataset::len).collect()
    }

    pub fn step(&mut self, rng: &mut SimRng, query: &Query) -> Result<RoundsStep, MechanismError> {
        let set = self.current + 1;
        let guess = empirical_mean(&self.estimation[self.current], query)?;
        let SparseOutcome { answer, empirical } = self.sparse.test(rng, query, guess)?;
        Ok(match answer {
            Answer::Bottom => RoundsStep {
                answer: guess,
                empirical: guess,
                fired: false,
                set,
            },
            Answer::Value(v) => {
                self.current += 1;
                RoundsStep {
                    answer: v,
                    empirical,
                    fired: true,
                    set,
                }
            }
        })
    }

    /// `c > r`: every estimation set has been discarded.
    pub fn exhausted(&self) -> bool {
        self.current >= self.estimation.len()
    }
}
