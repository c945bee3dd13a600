use super::noise::sample_laplace;
use super::{Calibration, MechanismError};
use crate::domain::rng::SimRng;
use crate::domain::{empirical_mean, Dataset, NeumaierSum, Query};

/// Private multiplicative weights over a tabulated universe.
#[derive(Debug, Clone)]
pub(crate) struct PmwState {
    data: Dataset,
    weights: Vec<f64>,
    eta: f64,
    threshold: f64,
    sigma: f64,
    cap: u64,
    hard_updates: u64,
}

pub(crate) enum PmwStep {
    Lazy { answer: f64, empirical: f64 },
    Hard { answer: f64, empirical: f64 },
}

impl PmwState {
    pub fn new(data: Dataset, cal: &Calibration) -> Result<Self, MechanismError> {
        let len = data.universe().tabulation_len()?;
        Ok(PmwState {
            data,
            weights: vec![1.0 / len as f64; len],
            eta: cal.pmw_eta.expect("pmw calibration"),
            threshold: cal.pmw_threshold.expect("pmw calibration"),
            sigma: cal.pmw_sigma.expect("pmw calibration"),
            cap: cal.pmw_update_cap.expect("pmw calibration"),
            hard_updates: 0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn hard_updates(&self) -> u64 {
        self.hard_updates
    }

    /// One round: compare the synthetic answer with a noisy empirical one and
    /// update the weights when they disagree by more than the threshold.
    ///
    /// A hard round answers `E_S[q]` plus the same noise draw used for the test.
    pub fn step(&mut self, rng: &mut SimRng, query: &Query) -> Result<PmwStep, MechanismError> {
        let table = query.table()?;
        let synthetic: f64 = table
            .iter()
            .zip(&self.weights)
            .map(|(q, w)| q * w)
            .collect::<NeumaierSum>()
            .total();
        let empirical = empirical_mean(&self.data, query)?;
        let noise = sample_laplace(rng, self.sigma);
        let d = empirical - synthetic + noise;
        if d.abs() <= self.threshold {
            return Ok(PmwStep::Lazy {
                answer: synthetic,
                empirical,
            });
        }
        if self.hard_updates >= self.cap {
            return Err(MechanismError::HardUpdateBudgetExhausted { cap: self.cap });
        }
        let step = self.eta * d.signum();
        for (w, q) in self.weights.iter_mut().zip(table.iter()) {
            *w *= (step * q).exp();
        }
        let total: f64 = self
            .weights
            .iter()
            .copied()
            .collect::<NeumaierSum>()
            .total();
        for w in &mut self.weights {
            *w /= total;
        }
        self.hard_updates += 1;
        Ok(PmwStep::Hard {
            answer: empirical + noise,
            empirical,
        })
    }
}
