//! Monte Carlo checks of generalization under adaptivity.

use serde::Serialize;

use super::binomial::{acceptance_limit, ACCEPTANCE_ALPHA};
use super::bounds::hoeffding_bound;
use super::trial::{run_trials, OracleFactory, TrialOutcome, TrialSpec};
use super::VerifyError;
use crate::privacy::{calibrate_epsilon_events, PrivacyParams};

fn check_tau(tau: f64) -> Result<(), VerifyError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(VerifyError::InvalidParameter {
            name: "tau",
            reason: format!("must lie in (0, 1], got {tau}"),
        });
    }
    Ok(())
}

fn limit(trials: usize, rate: f64) -> Result<u64, VerifyError> {
    acceptance_limit(trials as u64, rate.clamp(0.0, 1.0), ACCEPTANCE_ALPHA)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub mechanism: String,
    pub strategy: &'static str,
    pub n: usize,
    pub tau: f64,
    pub beta: f64,
    pub trials: usize,
    /// Trials whose final query was answered and scored.
    pub scored: usize,
    /// Trials with `|P[phi] - E_S[phi]| > tau` for the final query.
    pub violations: u64,
    /// Same count with `E_S` replaced by a fresh sample of equal size.
    pub baseline_violations: u64,
    pub hoeffding: f64,
    /// Largest violation count consistent with rate `beta`.
    pub limit: u64,
    /// Largest baseline count consistent with the Hoeffding rate.
    pub baseline_limit: u64,
    pub passed: bool,
}

/// Counts final-query generalization failures over `trials` independent
/// executions and compares the count with rate `beta`.
pub fn transfer_check(
    factory: &dyn OracleFactory,
    spec: &TrialSpec,
    tau: f64,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<TransferReport, VerifyError> {
    check_tau(tau)?;
    let spec = TrialSpec {
        score_all: false,
        fresh_baseline: true,
        ..spec.clone()
    };
    let outcomes = run_trials(factory, &spec, trials, seed)?;
    Ok(transfer_report(
        factory.label(),
        &spec,
        tau,
        beta,
        &outcomes,
    )?)
}

fn transfer_report(
    mechanism: String,
    spec: &TrialSpec,
    tau: f64,
    beta: f64,
    outcomes: &[TrialOutcome],
) -> Result<TransferReport, VerifyError> {
    let trials = outcomes.len();
    let scored = outcomes
        .iter()
        .filter(|o| o.violation(tau).is_some())
        .count();
    let violations = outcomes
        .iter()
        .filter(|o| o.violation(tau) == Some(true))
        .count() as u64;
    let baseline_violations = outcomes
        .iter()
        .filter(|o| o.baseline_violation(tau) == Some(true))
        .count() as u64;
    let hoeffding = hoeffding_bound(spec.n, tau);
    let limit = limit(trials, beta)?;
    Ok(TransferReport {
        mechanism,
        strategy: spec.strategy.name(),
        n: spec.n,
        tau,
        beta,
        trials,
        scored,
        violations,
        baseline_violations,
        hoeffding,
        limit,
        baseline_limit: self::limit(trials, hoeffding)?,
        passed: violations <= limit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub mechanism: String,
    pub strategy: &'static str,
    pub trials: usize,
    pub mean_empirical: f64,
    pub mean_true: f64,
    /// `|mean_empirical - mean_true|`.
    pub gap: f64,
    pub std_error: f64,
    /// `e^eps - 1 + delta` for the claimed guarantee.
    pub bound: f64,
    /// Set when `gap > bound + 3 std_error`.
    pub flagged: bool,
}

/// Estimates `|E[E_S[phi]] - E[P[phi]]|` for the final query `phi` and
/// compares it with `e^eps - 1 + delta`.
pub fn expectation_gap_check(
    factory: &dyn OracleFactory,
    spec: &TrialSpec,
    claimed: PrivacyParams,
    trials: usize,
    seed: u64,
) -> Result<GapReport, VerifyError> {
    let spec = TrialSpec {
        score_all: false,
        fresh_baseline: false,
        ..spec.clone()
    };
    let outcomes = run_trials(factory, &spec, trials, seed)?;
    let pairs: Vec<(f64, f64)> = outcomes
        .iter()
        .filter_map(|o| Some((o.final_empirical?, o.final_true?)))
        .collect();
    let k = pairs.len();
    if k < 2 {
        return Err(VerifyError::InvalidParameter {
            name: "trials",
            reason: format!("only {k} trials produced a final query"),
        });
    }
    let kf = k as f64;
    let mean_empirical = pairs.iter().map(|p| p.0).sum::<f64>() / kf;
    let mean_true = pairs.iter().map(|p| p.1).sum::<f64>() / kf;
    let mean_diff = mean_empirical - mean_true;
    let var = pairs
        .iter()
        .map(|p| (p.0 - p.1 - mean_diff).powi(2))
        .sum::<f64>()
        / (kf - 1.0);
    let std_error = (var / kf).sqrt();
    let bound = claimed.epsilon.exp_m1() + claimed.delta;
    let gap = mean_diff.abs();
    Ok(GapReport {
        mechanism: factory.label(),
        strategy: spec.strategy.name(),
        trials,
        mean_empirical,
        mean_true,
        gap,
        std_error,
        bound,
        flagged: gap > bound + 3.0 * std_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadEventReport {
    pub mechanism: String,
    pub strategy: &'static str,
    pub n: usize,
    pub tau: f64,
    /// Per-dataset probability of the event for a fixed query, `hoeffding_bound(n, tau)`.
    pub beta: f64,
    /// `3 sqrt(beta)`.
    pub bound: f64,
    pub trials: usize,
    pub events: u64,
    pub rate: f64,
    pub limit: u64,
    /// Largest pure epsilon the event bound is stated for, if defined.
    pub epsilon_limit: Option<f64>,
    pub epsilon_claimed: f64,
    pub precondition_holds: bool,
    pub passed: bool,
}

/// Rate at which the dataset lands in the bad set
/// `R(phi) = {S : |E_S[phi] - P[phi]| > tau}` of the final query.
pub fn bad_event_monitor(
    factory: &dyn OracleFactory,
    spec: &TrialSpec,
    claimed: PrivacyParams,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<BadEventReport, VerifyError> {
    check_tau(tau)?;
    let spec = TrialSpec {
        score_all: false,
        fresh_baseline: false,
        ..spec.clone()
    };
    let outcomes = run_trials(factory, &spec, trials, seed)?;
    let events = outcomes
        .iter()
        .filter(|o| o.violation(tau) == Some(true))
        .count() as u64;
    let beta = hoeffding_bound(spec.n, tau);
    let bound = 3.0 * beta.sqrt();
    let epsilon_limit = calibrate_epsilon_events(beta.min(1.0), spec.n).ok();
    let precondition_holds = epsilon_limit.is_some_and(|e| claimed.epsilon <= e);
    let limit = limit(trials, bound)?;
    Ok(BadEventReport {
        mechanism: factory.label(),
        strategy: spec.strategy.name(),
        n: spec.n,
        tau,
        beta,
        bound,
        trials,
        events,
        rate: if trials == 0 {
            0.0
        } else {
            events as f64 / trials as f64
        },
        limit,
        epsilon_limit,
        epsilon_claimed: claimed.epsilon,
        precondition_holds,
        passed: events <= limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysts::{Renormalization, StrategySpec};
    use crate::domain::{Population, Universe};
    use crate::mechanisms::{MechanismKind, OracleConfig};
    use crate::verify::ConstantFactory;

    fn uniform(size: u64) -> Population {
        Population::uniform(Universe::indexed(size).unwrap()).unwrap()
    }

    fn naive(spec: &TrialSpec) -> OracleConfig {
        let mut c = OracleConfig::new(MechanismKind::Naive);
        c.m = spec.strategy.query_count();
        c
    }

    fn probe(m_probe: usize) -> StrategySpec {
        StrategySpec::ReconstructionProbe {
            m_probe,
            quantile: 0.5,
            renormalization: Renormalization::MinMax,
        }
    }

    #[test]
    fn naive_non_adaptive_stays_near_hoeffding() {
        let spec = TrialSpec::new(uniform(64), 200, StrategySpec::NonAdaptiveRandom { m: 5 });
        let r = transfer_check(&naive(&spec), &spec, 0.1, 0.05, 100, 1).unwrap();
        assert_eq!(r.scored, 100);
        assert!(r.violations <= r.baseline_limit, "{r:?}");
        assert!(r.baseline_violations <= r.baseline_limit, "{r:?}");
    }

    #[test]
    fn naive_probe_overfits() {
        let spec = TrialSpec::new(uniform(1024), 100, probe(2000));
        let r = transfer_check(&naive(&spec), &spec, 0.15, 0.05, 20, 2).unwrap();
        assert!(r.violations >= 15, "{r:?}");
        assert!(!r.passed);
        assert!(r.baseline_violations <= r.baseline_limit);
    }

    #[test]
    fn constant_oracle_has_no_gap() {
        let spec = TrialSpec::new(uniform(512), 50, probe(200));
        let g = expectation_gap_check(&ConstantFactory(0.5), &spec, PrivacyParams::ZERO, 60, 3)
            .unwrap();
        assert_eq!(g.bound, 0.0);
        assert!(!g.flagged, "{g:?}");
        let b = bad_event_monitor(
            &ConstantFactory(0.5),
            &spec,
            PrivacyParams::ZERO,
            0.2,
            60,
            4,
        )
        .unwrap();
        assert!(b.passed && b.precondition_holds, "{b:?}");
    }

    #[test]
    fn naive_probe_gap_is_flagged() {
        let spec = TrialSpec::new(uniform(1024), 100, probe(2000));
        let g = expectation_gap_check(&naive(&spec), &spec, PrivacyParams::ZERO, 20, 5).unwrap();
        assert!(g.flagged && g.gap > 0.1, "{g:?}");
    }

    #[test]
    fn bad_event_formula() {
        let beta = hoeffding_bound(500, 0.1);
        assert!((3.0 * beta.sqrt() - 3.0 * 2f64.sqrt() * (-5.0f64).exp()).abs() < 1e-15);
        assert!((3.0 * beta.sqrt() - 0.02859).abs() < 1e-5);
    }

    #[test]
    fn reruns_are_identical() {
        let spec = TrialSpec::new(uniform(64), 40, StrategySpec::NonAdaptiveRandom { m: 3 });
        let cfg = naive(&spec);
        let a = run_trials(&cfg, &spec, 8, 9).unwrap();
        let b = run_trials(&cfg, &spec, 8, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, o)| o.trial == i as u64));
    }
}
