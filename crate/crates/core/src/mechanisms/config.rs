use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::MechanismError;
use crate::privacy::LedgerPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Naive,
    Laplace,
    Pmw,
    SparseVector,
    EffectiveRounds,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Naive => "naive",
            MechanismKind::Laplace => "laplace",
            MechanismKind::Pmw => "pmw",
            MechanismKind::SparseVector => "sparse-vector",
            MechanismKind::EffectiveRounds => "effective-rounds",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = MechanismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(
            match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
                "naive" => MechanismKind::Naive,
                "laplace" => MechanismKind::Laplace,
                "pmw" => MechanismKind::Pmw,
                "sparse-vector" | "sparse" => MechanismKind::SparseVector,
                "effective-rounds" => MechanismKind::EffectiveRounds,
                other => {
                    return Err(MechanismError::InvalidConfig {
                        field: "mechanism",
                        reason: format!("unknown mechanism {other:?}"),
                    })
                }
            },
        )
    }
}

/// Parameters of one oracle session.
///
/// `epsilon` and `delta` are the total budget of the session. With
/// `delta > 0` the budget is tracked by advanced composition with slack
/// `delta`; otherwise charges add up. The round-detecting oracle ignores
/// `epsilon` and `delta` and derives its own from `tau`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    pub mechanism: MechanismKind,
    pub tau: f64,
    pub beta: f64,
    pub m: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub r: u32,
    pub threshold: f64,
    pub noiseless: bool,
    pub clamp: bool,
    pub pmw_eta: Option<f64>,
    pub pmw_threshold: Option<f64>,
}

pub const CONFIG_KEYS: [&str; 12] = [
    "mechanism",
    "tau",
    "beta",
    "m",
    "epsilon",
    "delta",
    "r",
    "threshold",
    "noiseless",
    "clamp",
    "pmw_eta",
    "pmw_threshold",
];

/// Noise scales and per-step charges resolved for a particular dataset size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub mechanism: MechanismKind,
    /// Size of the set the noise is calibrated to.
    pub n: usize,
    pub policy: LedgerPolicy,
    /// Privacy charged per answered query (Laplace, PMW) or per firing (sparse).
    pub per_charge_epsilon: f64,
    pub laplace_sigma: Option<f64>,
    pub pmw_sigma: Option<f64>,
    pub pmw_eta: Option<f64>,
    pub pmw_threshold: Option<f64>,
    pub pmw_update_cap: Option<u64>,
    pub sparse_threshold: Option<f64>,
    pub sparse_epsilon: Option<f64>,
    pub sparse_threshold_scale: Option<f64>,
    pub sparse_test_scale: Option<f64>,
    pub sparse_answer_scale: Option<f64>,
}

impl OracleConfig {
    pub fn new(mechanism: MechanismKind) -> Self {
        OracleConfig {
            mechanism,
            tau: 0.1,
            beta: 0.05,
            m: 100,
            epsilon: 1.0,
            delta: 0.0,
            r: 1,
            threshold: 0.0,
            noiseless: false,
            clamp: false,
            pmw_eta: None,
            pmw_threshold: None,
        }
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), MechanismError> {
        let value = value.trim();
        match key.trim() {
            "mechanism" => self.mechanism = value.parse()?,
            "tau" => self.tau = parse_f64("tau", value)?,
            "beta" => self.beta = parse_f64("beta", value)?,
            "m" => self.m = parse_int("m", value)?,
            "epsilon" => self.epsilon = parse_f64("epsilon", value)?,
            "delta" => self.delta = parse_f64("delta", value)?,
            "r" => self.r = parse_int("r", value)?,
            "threshold" => self.threshold = parse_f64("threshold", value)?,
            "noiseless" => self.noiseless = parse_bool("noiseless", value)?,
            "clamp" => self.clamp = parse_bool("clamp", value)?,
            "pmw_eta" => self.pmw_eta = Some(parse_f64("pmw_eta", value)?),
            "pmw_threshold" => self.pmw_threshold = Some(parse_f64("pmw_threshold", value)?),
            other => {
                return Err(MechanismError::InvalidConfig {
                    field: "key",
                    reason: format!(
                        "unknown key {other:?}; expected one of {}",
                        CONFIG_KEYS.join(", ")
                    ),
                })
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are skipped;
    /// keys not given keep their defaults.
    pub fn from_text(text: &str) -> Result<Self, MechanismError> {
        let mut cfg = OracleConfig::new(MechanismKind::Naive);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| MechanismError::InvalidConfig {
                    field: "line",
                    reason: format!("expected key = value, got {line:?}"),
                })?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "mechanism = {}\ntau = {}\nbeta = {}\nm = {}\nepsilon = {}\ndelta = {}\nr = {}\nthreshold = {}\nnoiseless = {}\nclamp = {}\n",
            self.mechanism, self.tau, self.beta, self.m, self.epsilon, self.delta, self.r, self.threshold,
            self.noiseless, self.clamp
        );
        if let Some(eta) = self.pmw_eta {
            out.push_str(&format!("pmw_eta = {eta}\n"));
        }
        if let Some(t) = self.pmw_threshold {
            out.push_str(&format!("pmw_threshold = {t}\n"));
        }
        out
    }

    pub fn validate(&self) -> Result<(), MechanismError> {
        let bad = |field: &'static str, reason: String| {
            Err(MechanismError::InvalidConfig { field, reason })
        };
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau", format!("must lie in (0, 1), got {}", self.tau));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta", format!("must lie in (0, 1), got {}", self.beta));
        }
        if self.m == 0 {
            return bad("m", "must be >= 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(
                "epsilon",
                format!("must be finite and >= 0, got {}", self.epsilon),
            );
        }
        if !(0.0..1.0).contains(&self.delta) {
            return bad("delta", format!("must lie in [0, 1), got {}", self.delta));
        }
        let private = matches!(
            self.mechanism,
            MechanismKind::Laplace | MechanismKind::Pmw | MechanismKind::SparseVector
        );
        if private && !self.noiseless && self.epsilon == 0.0 {
            return bad("epsilon", "must be > 0 unless noiseless".into());
        }
        if matches!(
            self.mechanism,
            MechanismKind::SparseVector | MechanismKind::EffectiveRounds
        ) && self.r == 0
        {
            return bad("r", "must be >= 1".into());
        }
        if !self.threshold.is_finite() {
            return bad("threshold", "must be finite".into());
        }
        if let Some(eta) = self.pmw_eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad("pmw_eta", format!("must be positive, got {eta}"));
            }
        }
        if let Some(t) = self.pmw_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("pmw_threshold", format!("must be >= 0, got {t}"));
            }
        }
        Ok(())
    }

    pub(crate) fn policy(&self) -> LedgerPolicy {
        if self.delta > 0.0 && self.mechanism != MechanismKind::EffectiveRounds {
            LedgerPolicy::Advanced {
                delta_prime: self.delta,
            }
        } else {
            LedgerPolicy::Basic
        }
    }

    /// Per-step epsilon when the total `epsilon` is spread over `k` steps:
    /// `eps / k` under basic composition, `eps / (2 sqrt(2k ln(1/delta)))`
    /// under advanced composition.
    fn split(&self, epsilon: f64, k: f64) -> f64 {
        match self.policy() {
            LedgerPolicy::Basic => epsilon / k,
            LedgerPolicy::Advanced { delta_prime } => {
                epsilon / (2.0 * (2.0 * k * (1.0 / delta_prime).ln()).sqrt())
            }
        }
    }

    /// Resolves noise scales for a session over `n` points of a universe
    /// with `ln_universe = ln|X|` (only needed by PMW).
    pub fn calibrate(&self, n: usize, ln_universe: Option<f64>) -> Calibration {
        let nf = n as f64;
        let mut c = Calibration {
            mechanism: self.mechanism,
            n,
            policy: self.policy(),
            per_charge_epsilon: 0.0,
            laplace_sigma: None,
            pmw_sigma: None,
            pmw_eta: None,
            pmw_threshold: None,
            pmw_update_cap: None,
            sparse_threshold: None,
            sparse_epsilon: None,
            sparse_threshold_scale: None,
            sparse_test_scale: None,
            sparse_answer_scale: None,
        };
        let noise = |scale: f64| if self.noiseless { 0.0 } else { scale };
        match self.mechanism {
            MechanismKind::Naive => {}
            MechanismKind::Laplace => {
                let eps_i = self.split(self.epsilon, self.m as f64);
                c.per_charge_epsilon = eps_i;
                c.laplace_sigma = Some(noise(1.0 / (nf * eps_i)));
            }
            MechanismKind::Pmw => {
                let eps_i = self.split(self.epsilon, self.m as f64);
                c.per_charge_epsilon = eps_i;
                c.pmw_sigma = Some(noise(1.0 / (nf * eps_i)));
                c.pmw_eta = Some(self.pmw_eta.unwrap_or(self.tau / 8.0));
                c.pmw_threshold = Some(self.pmw_threshold.unwrap_or(self.tau / 2.0));
                c.pmw_update_cap =
                    ln_universe.map(|l| (16.0 * l / (self.tau * self.tau)).ceil().max(1.0) as u64);
            }
            MechanismKind::SparseVector => {
                self.fill_sparse(&mut c, self.threshold, self.epsilon, nf);
            }
            MechanismKind::EffectiveRounds => {
                self.fill_sparse(&mut c, self.tau / 4.0, self.tau / 16.0, nf);
            }
        }
        c
    }

    fn fill_sparse(&self, c: &mut Calibration, threshold: f64, epsilon: f64, n: f64) {
        // Effective number of firings the noise is scaled for.
        let r = self.r as f64;
        let r_eff = match self.policy() {
            LedgerPolicy::Basic => r,
            LedgerPolicy::Advanced { delta_prime } => {
                (8.0 * r * (2.0 / delta_prime).ln()).sqrt().min(r)
            }
        };
        let eps1 = 8.0 * epsilon / 9.0;
        let eps2 = epsilon / 9.0;
        let noise = |scale: f64| if self.noiseless { 0.0 } else { scale };
        c.per_charge_epsilon = epsilon / r_eff;
        c.sparse_threshold = Some(threshold);
        c.sparse_epsilon = Some(epsilon);
        c.sparse_threshold_scale = Some(noise(2.0 * r_eff / (eps1 * n)));
        c.sparse_test_scale = Some(noise(4.0 * r_eff / (eps1 * n)));
        c.sparse_answer_scale = Some(noise(r_eff / (eps2 * n)));
    }
}

fn parse_f64(field: &'static str, v: &str) -> Result<f64, MechanismError> {
    v.parse().map_err(|_| MechanismError::InvalidConfig {
        field,
        reason: format!("not a number: {v:?}"),
    })
}

fn parse_int<T: FromStr>(field: &'static str, v: &str) -> Result<T, MechanismError> {
    v.parse().map_err(|_| MechanismError::InvalidConfig {
        field,
        reason: format!("not a nonnegative integer: {v:?}"),
    })
}

fn parse_bool(field: &'static str, v: &str) -> Result<bool, MechanismError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(MechanismError::InvalidConfig {
            field,
            reason: format!("not a boolean: {v:?}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = OracleConfig::new(MechanismKind::Pmw);
        cfg.tau = 0.2;
        cfg.pmw_eta = Some(0.05);
        cfg.delta = 1e-6;
        let back = OracleConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_names_fields() {
        let err = OracleConfig::from_text("mechanism = laplace\ntau = 1.5\n").unwrap_err();
        assert!(matches!(
            err,
            MechanismError::InvalidConfig { field: "tau", .. }
        ));
        let err = OracleConfig::from_text("mechanism = laplace\nepsilon = 0\n").unwrap_err();
        assert!(matches!(
            err,
            MechanismError::InvalidConfig {
                field: "epsilon",
                ..
            }
        ));
        assert!(
            OracleConfig::from_text("mechanism = laplace\nepsilon = 0\nnoiseless = true\n").is_ok()
        );
        let err = OracleConfig::from_text("speed = 3\n").unwrap_err();
        assert!(matches!(
            err,
            MechanismError::InvalidConfig { field: "key", .. }
        ));
        let err = OracleConfig::from_text("mechanism = magic\n").unwrap_err();
        assert!(matches!(
            err,
            MechanismError::InvalidConfig {
                field: "mechanism",
                ..
            }
        ));
    }

    #[test]
    fn laplace_pure_sigma() {
        let mut cfg = OracleConfig::new(MechanismKind::Laplace);
        cfg.m = 10;
        cfg.epsilon = 0.5;
        let c = cfg.calibrate(1000, None);
        assert!((c.laplace_sigma.unwrap() - 0.02).abs() < 1e-15);
        assert!((c.per_charge_epsilon - 0.05).abs() < 1e-15);
    }

    #[test]
    fn laplace_approx_sigma() {
        let mut cfg = OracleConfig::new(MechanismKind::Laplace);
        cfg.m = 50;
        cfg.epsilon = 1.0;
        cfg.delta = 1e-6;
        let c = cfg.calibrate(1000, None);
        let eps_i = 1.0 / (2.0 * (100.0 * 1e6f64.ln()).sqrt());
        assert!((c.per_charge_epsilon - eps_i).abs() < 1e-15);
        assert!((c.laplace_sigma.unwrap() - 1.0 / (1000.0 * eps_i)).abs() < 1e-12);
        // Advanced composition of 50 such charges stays within the budget.
        let total = crate::privacy::compose_advanced(eps_i, 0.0, 50, 1e-6).unwrap();
        assert!(total.epsilon <= 1.0);
    }

    #[test]
    fn sparse_scales() {
        let mut cfg = OracleConfig::new(MechanismKind::SparseVector);
        cfg.r = 3;
        cfg.epsilon = 0.9;
        let c = cfg.calibrate(100, None);
        // eps1 = 0.8, eps2 = 0.1
        assert!((c.sparse_threshold_scale.unwrap() - 6.0 / 80.0).abs() < 1e-15);
        assert!((c.sparse_test_scale.unwrap() - 12.0 / 80.0).abs() < 1e-15);
        assert!((c.sparse_answer_scale.unwrap() - 3.0 / 10.0).abs() < 1e-15);
        assert!((c.per_charge_epsilon - 0.3).abs() < 1e-15);
    }

    #[test]
    fn pmw_defaults() {
        let mut cfg = OracleConfig::new(MechanismKind::Pmw);
        cfg.tau = 0.2;
        let c = cfg.calibrate(100, Some(8f64.ln()));
        assert_eq!(c.pmw_eta, Some(0.025));
        assert_eq!(c.pmw_threshold, Some(0.1));
        assert_eq!(
            c.pmw_update_cap,
            Some((16.0 * 8f64.ln() / 0.04).ceil() as u64)
        );
    }
}
