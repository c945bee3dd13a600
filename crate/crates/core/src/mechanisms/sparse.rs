use super::noise::sample_laplace;
use super::{Calibration, MechanismError};
use crate::domain::rng::SimRng;
use crate::domain::{empirical_mean, Answer, Dataset, Query};

/// Numeric sparse vector over one dataset.
///
/// A query with guess `g` is below threshold when
/// `|E_S[q] - g| + nu <= T + rho`, with `nu` fresh test noise and `rho`
/// threshold noise that is redrawn after every firing. Below threshold gives
/// `Bottom`; above gives `E_S[q]` plus answer noise and uses one firing.
#[derive(Debug, Clone)]
pub(crate) struct SparseCore {
    data: Dataset,
    threshold: f64,
    threshold_scale: f64,
    test_scale: f64,
    answer_scale: f64,
    firings_left: u32,
    rho: f64,
}

pub(crate) struct SparseOutcome {
    pub answer: Answer,
    pub empirical: f64,
}

impl SparseCore {
    pub fn new(data: Dataset, cal: &Calibration, firings: u32, rng: &mut SimRng) -> Self {
        let threshold_scale = cal.sparse_threshold_scale.expect("sparse calibration");
        let rho = sample_laplace(rng, threshold_scale);
        SparseCore {
            data,
            threshold: cal.sparse_threshold.expect("sparse calibration"),
            threshold_scale,
            test_scale: cal.sparse_test_scale.expect("sparse calibration"),
            answer_scale: cal.sparse_answer_scale.expect("sparse calibration"),
            firings_left: firings,
            rho,
        }
    }

    pub fn firings_left(&self) -> u32 {
        self.firings_left
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn test(
        &mut self,
        rng: &mut SimRng,
        query: &Query,
        guess: f64,
    ) -> Result<SparseOutcome, MechanismError> {
        if self.firings_left == 0 {
            return Err(MechanismError::FiringBudgetExhausted);
        }
        let empirical = empirical_mean(&self.data, query)?;
        let nu = sample_laplace(rng, self.test_scale);
        if (empirical - guess).abs() + nu <= self.threshold + self.rho {
            return Ok(SparseOutcome {
                answer: Answer::Bottom,
                empirical,
            });
        }
        self.firings_left -= 1;
        let value = empirical + sample_laplace(rng, self.answer_scale);
        self.rho = sample_laplace(rng, self.threshold_scale);
        Ok(SparseOutcome {
            answer: Answer::Value(value),
            empirical,
        })
    }
}
