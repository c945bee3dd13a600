//! Moments of the normalized binomial and the lemmas built on them.

use rand::Rng;
use serde::Serialize;

use super::binomial::normalized_moment;
use super::VerifyError;
use crate::domain::rng::stream_rng;

/// `(n, p, k)` for the moment `M_k[B(n, p)] = E[(J / n)^k]`, `J ~ Bin(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSpec {
    pub n: u64,
    pub p: f64,
    pub k: u32,
}

impl MomentSpec {
    pub fn new(n: u64, p: f64, k: u32) -> Result<Self, VerifyError> {
        if k == 0 || u64::from(k) > n {
            return Err(VerifyError::InvalidParameter {
                name: "k",
                reason: format!("need 1 <= k <= n, got k={k}, n={n}"),
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(VerifyError::InvalidParameter {
                name: "p",
                reason: format!("must lie in [0, 1], got {p}"),
            });
        }
        Ok(MomentSpec { n, p, k })
    }
}

/// `M_k[B(n, p)]`, summed over the binomial pmf in log space.
pub fn binomial_moment(spec: MomentSpec) -> Result<f64, VerifyError> {
    let MomentSpec { n, p, k } = MomentSpec::new(spec.n, spec.p, spec.k)?;
    normalized_moment(n, p, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentBoundCheck {
    pub n: u64,
    pub p: f64,
    pub k: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Relative slack allowed when comparing a computed moment to its bound.
pub const MOMENT_REL_TOL: f64 = 1e-12;

/// Compares `M_k[B(n, p)]` with `p^k + (k ln n + 1)(k/n)^k`.
pub fn check_moment_upper_bound(n: u64, p: f64, k: u32) -> Result<MomentBoundCheck, VerifyError> {
    let lhs = binomial_moment(MomentSpec::new(n, p, k)?)?;
    let nf = n as f64;
    let kf = k as f64;
    let rhs = p.powi(k as i32) + (kf * nf.ln() + 1.0) * (kf / nf).powi(k as i32);
    Ok(MomentBoundCheck {
        n,
        p,
        k,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + MOMENT_REL_TOL),
    })
}

/// One precondition of the moment-tail lemma and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub detail: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovTail {
    /// `e^{eps k} M_k / (p + tau)^k + delta / (p + tau)^k`.
    pub markov: f64,
    /// Smallest `beta` allowed by `k >= 4 p ln(2/beta) / tau`.
    pub beta: f64,
    /// `beta + delta / (p + tau)^k`, present only when every condition holds.
    pub beta_form: Option<f64>,
    pub conditions: Vec<Condition>,
    /// How the `log log n` term was read.
    pub log_log_reading: &'static str,
}

impl MarkovTail {
    pub fn all_conditions_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    /// Fails on the first condition that does not hold.
    pub fn require_conditions(&self) -> Result<(), VerifyError> {
        match self.conditions.iter().find(|c| !c.holds) {
            Some(c) => Err(VerifyError::ConditionViolated {
                name: c.name,
                detail: c.detail.clone(),
            }),
            None => Ok(()),
        }
    }
}

pub const LOG_LOG_READING: &str = "ceil(log2(ln n))";

/// Tail bound for `V >= p + tau` where `V^k` is dominated by
/// `e^{eps k} M_k[B(n, p)] + delta`.
///
/// The Markov bound is always evaluated. The lemma's conditions are checked
/// one by one and reported; the `beta` form is returned only when they all
/// hold. Inputs outside the domain of the formulas are errors.
pub fn markov_moment_tail(
    n: u64,
    p: f64,
    k: u32,
    eps: f64,
    delta: f64,
    tau: f64,
) -> Result<MarkovTail, VerifyError> {
    let spec = MomentSpec::new(n, p, k)?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(VerifyError::ConditionViolated {
            name: "eps >= 0",
            detail: format!("eps = {eps}"),
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(VerifyError::ConditionViolated {
            name: "delta >= 0",
            detail: format!("delta = {delta}"),
        });
    }
    if !(tau >= 0.0 && tau.is_finite()) || p + tau <= 0.0 {
        return Err(VerifyError::ConditionViolated {
            name: "p + tau > 0",
            detail: format!("p = {p}, tau = {tau}"),
        });
    }
    let m_k = binomial_moment(spec)?;
    let kf = k as f64;
    let ln_base = kf * (p + tau).ln();
    let markov = (eps * kf + m_k.ln() - ln_base).exp() + delta * (-ln_base).exp();

    let beta = if p > 0.0 && tau > 0.0 {
        2.0 * (-kf * tau / (4.0 * p)).exp()
    } else {
        0.0
    };
    let log_log = {
        let ln_n = (n as f64).ln();
        if ln_n > 1.0 {
            ln_n.log2().ceil()
        } else {
            0.0
        }
    };
    let mut conditions = vec![
        Condition {
            name: "p > 0",
            detail: format!("p = {p}"),
            holds: p > 0.0,
        },
        Condition {
            name: "0 < tau <= 1/3",
            detail: format!("tau = {tau}"),
            holds: tau > 0.0 && tau <= 1.0 / 3.0,
        },
        Condition {
            name: "eps <= tau/2",
            detail: format!("eps = {eps}, tau/2 = {}", tau / 2.0),
            holds: eps <= tau / 2.0,
        },
        Condition {
            name: "k >= 2 log log n",
            detail: format!("k = {k}, 2 {LOG_LOG_READING} = {}", 2.0 * log_log),
            holds: kf >= 2.0 * log_log,
        },
        Condition {
            name: "n >= 3k/tau",
            detail: format!("n = {n}, 3k/tau = {}", 3.0 * kf / tau),
            holds: tau > 0.0 && n as f64 >= 3.0 * kf / tau,
        },
    ];
    conditions.push(Condition {
        name: "beta <= 2/3",
        detail: format!("beta = 2 exp(-k tau / (4p)) = {beta}"),
        holds: beta > 0.0 && beta <= 2.0 / 3.0,
    });
    let holds = conditions.iter().all(|c| c.holds);
    let beta_form = holds.then(|| beta + delta * (-ln_base).exp());
    Ok(MarkovTail {
        markov,
        beta,
        beta_form,
        conditions,
        log_log_reading: LOG_LOG_READING,
    })
}

/// A `[0, 1]`-valued law with a given mean, for the domination check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundedLaw {
    Bernoulli,
    Constant,
    /// Uniform on `[0, 2p]` for `p <= 1/2`, on `[2p - 1, 1]` otherwise.
    UniformScaled,
}

impl BoundedLaw {
    fn draw<R: Rng>(self, p: f64, rng: &mut R) -> f64 {
        match self {
            BoundedLaw::Bernoulli => f64::from(u8::from(rng.random::<f64>() < p)),
            BoundedLaw::Constant => p,
            BoundedLaw::UniformScaled => {
                let (lo, hi) = if p <= 0.5 {
                    (0.0, 2.0 * p)
                } else {
                    (2.0 * p - 1.0, 1.0)
                };
                lo + (hi - lo) * rng.random::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationReport {
    pub n: u64,
    pub p: f64,
    pub k: u32,
    pub law: BoundedLaw,
    pub trials: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub moment: f64,
    /// Set when the estimate exceeds `moment` by more than three standard errors.
    pub flagged: bool,
}

/// Monte Carlo estimate of `E[(mean of n draws)^k]` under `law`, compared
/// with the binomial moment of the same mean.
pub fn check_bernoulli_domination(
    n: u64,
    p: f64,
    k: u32,
    law: BoundedLaw,
    trials: usize,
    seed: u64,
) -> Result<DominationReport, VerifyError> {
    let moment = binomial_moment(MomentSpec::new(n, p, k)?)?;
    if trials < 2 {
        return Err(VerifyError::InvalidParameter {
            name: "trials",
            reason: "need at least 2".into(),
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..trials {
        let s: f64 = (0..n).map(|_| law.draw(p, &mut rng)).sum();
        let v = (s / n as f64).powi(k as i32);
        let d = v - mean;
        mean += d / (t + 1) as f64;
        m2 += d * (v - mean);
    }
    let std_error = (m2 / (trials - 1) as f64 / trials as f64).sqrt();
    Ok(DominationReport {
        n,
        p,
        k,
        law,
        trials,
        estimate: mean,
        std_error,
        moment,
        flagged: mean > moment + 3.0 * std_error,
    })
}
