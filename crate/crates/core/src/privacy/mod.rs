//! Privacy parameter algebra: group privacy, basic and advanced composition,
//! a per-session budget ledger, transfer calibration of epsilon, and
//! sample-size calculators.
//!
//! Every function here is pure. Logarithms are natural.

mod ledger;
mod sizing;

use serde::Serialize;
use thiserror::Error;

pub use ledger::{BudgetLedger, LedgerPolicy};
pub use sizing::{formula_value, required_sample_size, SampleSizeFormula, SizingParams, DEFAULT_C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("sample of size {actual} is below the required {required:.3} ({formula})")]
    SampleTooSmall {
        required: f64,
        actual: usize,
        formula: &'static str,
    },
    #[error("{formula} needs parameter {name}")]
    MissingParameter {
        formula: &'static str,
        name: &'static str,
    },
    #[error("advanced composition needs identical charges; got {first:?} then {other:?}")]
    HeterogeneousCharges {
        first: PrivacyParams,
        other: PrivacyParams,
    },
}

/// An `(epsilon, delta)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, PrivacyError> {
        if !(epsilon >= 0.0) {
            return Err(invalid("epsilon", format!("must be >= 0, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(PrivacyParams { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self, PrivacyError> {
        Self::new(epsilon, 0.0)
    }

    pub const ZERO: PrivacyParams = PrivacyParams {
        epsilon: 0.0,
        delta: 0.0,
    };
}

fn invalid(name: &'static str, reason: String) -> PrivacyError {
    PrivacyError::InvalidParameter { name, reason }
}

fn check_unit_open(name: &'static str, v: f64) -> Result<(), PrivacyError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {v}")))
    }
}

/// Guarantee for datasets differing in at most `k` elements:
/// `(k eps, e^{eps (k - 1)} delta)`.
pub fn group_privacy(p: PrivacyParams, k: u32) -> Result<PrivacyParams, PrivacyError> {
    if k == 0 {
        return Err(invalid("k", "group size must be >= 1".into()));
    }
    let k = k as f64;
    Ok(PrivacyParams {
        epsilon: k * p.epsilon,
        delta: (p.epsilon * (k - 1.0)).exp() * p.delta,
    })
}

/// Basic composition: component-wise sums.
pub fn compose_basic(charges: &[PrivacyParams]) -> PrivacyParams {
    charges
        .iter()
        .fold(PrivacyParams::ZERO, |acc, c| PrivacyParams {
            epsilon: acc.epsilon + c.epsilon,
            delta: acc.delta + c.delta,
        })
}

/// Advanced composition of `k` mechanisms, each `(eps, delta)`:
/// `eps' = sqrt(2k ln(1/delta')) eps + k eps (e^eps - 1)`, total delta `k delta + delta'`.
pub fn compose_advanced(
    epsilon: f64,
    delta: f64,
    k: u32,
    delta_prime: f64,
) -> Result<PrivacyParams, PrivacyError> {
    if k == 0 {
        return Err(invalid("k", "must be >= 1".into()));
    }
    check_unit_open("delta_prime", delta_prime)?;
    let k = k as f64;
    let eps =
        (2.0 * k * (1.0 / delta_prime).ln()).sqrt() * epsilon + k * epsilon * epsilon.exp_m1();
    Ok(PrivacyParams {
        epsilon: eps,
        delta: k * delta + delta_prime,
    })
}

/// Pure-DP transfer calibration: `tau / 2`, provided `n >= 12 ln(4/beta) / tau^2`.
pub fn calibrate_epsilon_pure(tau: f64, beta: f64, n: usize) -> Result<f64, PrivacyError> {
    check_unit_open("tau", tau)?;
    check_unit_open("beta", beta)?;
    let required = 12.0 * (4.0 / beta).ln() / (tau * tau);
    if (n as f64) < required {
        return Err(PrivacyError::SampleTooSmall {
            required,
            actual: n,
            formula: "12 ln(4/beta)/tau^2",
        });
    }
    Ok(tau / 2.0)
}

/// Approximate-DP transfer calibration: `(tau / 4, exp(-4 ln(8/beta) / tau))`,
/// provided `n >= 48 ln(4/beta) / tau^2`.
pub fn calibrate_eps_delta(tau: f64, beta: f64, n: usize) -> Result<PrivacyParams, PrivacyError> {
    check_unit_open("tau", tau)?;
    check_unit_open("beta", beta)?;
    let required = 48.0 * (4.0 / beta).ln() / (tau * tau);
    if (n as f64) < required {
        return Err(PrivacyError::SampleTooSmall {
            required,
            actual: n,
            formula: "48 ln(4/beta)/tau^2",
        });
    }
    Ok(PrivacyParams {
        epsilon: tau / 4.0,
        delta: (-4.0 * (8.0 / beta).ln() / tau).exp(),
    })
}

/// Largest epsilon for which a bad event of probability at most `beta` under
/// independent data stays below `3 sqrt(beta)`: `sqrt(ln(1/beta) / 2n)`.
pub fn calibrate_epsilon_events(beta: f64, n: usize) -> Result<f64, PrivacyError> {
    check_unit_open("beta", beta)?;
    if n == 0 {
        return Err(invalid("n", "must be >= 1".into()));
    }
    Ok(((1.0 / beta).ln() / (2.0 * n as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_privacy_cases() {
        let p = PrivacyParams::new(0.1, 0.0).unwrap();
        let g = group_privacy(p, 5).unwrap();
        assert!((g.epsilon - 0.5).abs() < 1e-15 && g.delta == 0.0);
        let p = PrivacyParams::new(0.3, 1e-5).unwrap();
        assert_eq!(group_privacy(p, 1).unwrap(), p);
        let g = group_privacy(PrivacyParams::new(0.2, 1e-6).unwrap(), 3).unwrap();
        assert!((g.epsilon - 0.6).abs() < 1e-15);
        // e^{0.4} * 1e-6
        assert!((g.delta - 1.4918246976412703e-6).abs() < 1e-18);
        assert!(group_privacy(p, 0).is_err());
    }

    #[test]
    fn group_privacy_epsilon_is_additive_in_k() {
        let p = PrivacyParams::new(0.07, 1e-7).unwrap();
        for (a, b) in [(2, 3), (1, 4), (5, 5)] {
            let once = group_privacy(p, a * b).unwrap();
            let twice = group_privacy(group_privacy(p, a).unwrap(), b).unwrap();
            assert!((once.epsilon - twice.epsilon).abs() < 1e-12);
        }
    }

    #[test]
    fn basic_composition_cases() {
        assert_eq!(compose_basic(&[]), PrivacyParams::ZERO);
        let c = PrivacyParams::new(0.1, 0.0).unwrap();
        assert!((compose_basic(&[c, c, c]).epsilon - 0.3).abs() < 1e-15);
        let s = compose_basic(&[
            PrivacyParams::new(0.1, 1e-7).unwrap(),
            PrivacyParams::new(0.2, 2e-7).unwrap(),
        ]);
        assert!((s.epsilon - 0.3).abs() < 1e-15 && (s.delta - 3e-7).abs() < 1e-21);
    }

    #[test]
    fn advanced_composition_cases() {
        let p = compose_advanced(0.1, 0.0, 10, 1e-6).unwrap();
        // sqrt(20 ln 1e6) * 0.1 + 10 * 0.1 * (e^0.1 - 1), evaluated independently.
        assert!(
            (p.epsilon - 1.767429054344758).abs() < 1e-12,
            "{}",
            p.epsilon
        );
        assert_eq!(p.delta, 1e-6);
        assert_eq!(
            compose_advanced(0.0, 0.0, 100, 0.1).unwrap(),
            PrivacyParams {
                epsilon: 0.0,
                delta: 0.1
            }
        );
        let single = compose_advanced(0.3, 0.0, 1, 0.05).unwrap();
        assert!(single.epsilon > 0.3);
        assert!(compose_advanced(0.1, 0.0, 0, 0.1).is_err());
        assert!(compose_advanced(0.1, 0.0, 3, 1.0).is_err());
    }

    #[test]
    fn advanced_composition_monotonicity() {
        let base = compose_advanced(0.05, 1e-8, 20, 1e-5).unwrap().epsilon;
        assert!(compose_advanced(0.05, 1e-8, 21, 1e-5).unwrap().epsilon > base);
        assert!(compose_advanced(0.06, 1e-8, 20, 1e-5).unwrap().epsilon > base);
        assert!(compose_advanced(0.05, 1e-8, 20, 1e-4).unwrap().epsilon < base);
    }

    #[test]
    fn pure_calibration() {
        assert_eq!(calibrate_epsilon_pure(0.2, 0.05, 2000).unwrap(), 0.1);
        assert!(matches!(
            calibrate_epsilon_pure(0.2, 0.05, 1000),
            Err(PrivacyError::SampleTooSmall { .. })
        ));
        assert_eq!(calibrate_epsilon_pure(0.5, 0.5, 100).unwrap(), 0.25);
        // 12 ln 80 / 0.04 = 1314.6..., so 1314 fails and 1315 passes.
        assert!(calibrate_epsilon_pure(0.2, 0.05, 1314).is_err());
        assert!(calibrate_epsilon_pure(0.2, 0.05, 1315).is_ok());
    }

    #[test]
    fn approximate_calibration() {
        let p = calibrate_eps_delta(0.2, 0.05, 6000).unwrap();
        assert_eq!(p.epsilon, 0.05);
        let expected = (-4.0f64 * 160f64.ln() / 0.2).exp();
        assert!((p.delta / expected - 1.0).abs() < 1e-12);
        assert!((p.delta / 8.2718e-45 - 1.0).abs() < 1e-4);

        // 48 ln 20 / 0.16 = 898.7, so 600 points are not enough.
        assert!(calibrate_eps_delta(0.4, 0.2, 600).is_err());
        let p = calibrate_eps_delta(0.4, 0.2, 900).unwrap();
        assert_eq!(p.epsilon, 0.1);
        assert!((p.delta / 40f64.powi(-10) - 1.0).abs() < 1e-12);
        assert!(calibrate_eps_delta(0.2, 0.05, 5000).is_err());
    }

    #[test]
    fn event_calibration() {
        let e = calibrate_epsilon_events((-2.0f64).exp(), 100).unwrap();
        assert!((e - 0.1).abs() < 1e-15);
        let e = calibrate_epsilon_events(0.01, 10_000).unwrap();
        assert!((e - 0.015174271293851465).abs() < 1e-15);
        let near_one = calibrate_epsilon_events(1.0 - 1e-12, 10).unwrap();
        assert!(near_one < 1e-6);
    }
}
