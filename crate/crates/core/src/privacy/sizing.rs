use serde::Serialize;

use super::PrivacyError;

/// Default multiplier for sample-size bounds stated up to a constant.
pub const DEFAULT_C: f64 = 32.0;

/// The sample-size bounds this crate can evaluate. Natural logs throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSizeFormula {
    /// `m ln(1/beta) / (eps tau)`: Laplace answers accurate on the sample.
    LaplacePure,
    /// `sqrt(m ln(1/delta)) ln(1/beta) / (eps tau)`.
    LaplaceApprox,
    /// `m ln(1/beta) / tau^2`: Laplace answers accurate for the population.
    LaplaceStatistical,
    /// `sqrt(m) ln(1/beta)^1.5 / tau^2.5`.
    LaplaceStatisticalApprox,
    /// `ln|X| ln(1/beta) / (eps tau^3)`.
    PmwPure,
    /// `sqrt(ln|X| ln(1/delta)) ln(1/beta) / (eps tau^2)`.
    PmwApprox,
    /// `ln|X| ln(1/beta) / tau^4`.
    PmwStatistical,
    /// `sqrt(ln|X|) ln(1/beta)^1.5 / tau^3.5`.
    PmwStatisticalApprox,
    /// `9 r ln(4/beta) / (tau eps)`, explicit constant.
    SparsePure,
    /// `(sqrt(512) + 1) sqrt(r ln(2/delta)) ln(4/beta) / (tau eps)`, explicit constant.
    SparseApprox,
    /// `r ln(1/beta) / tau^2`: answering with `r` rounds of adaptivity.
    RoundsStatistical,
    /// `1156 r ln(12/beta) / tau^2`, explicit constant: input size for the
    /// round-detecting oracle.
    EffectiveRoundsInput,
    /// `12 ln(4/beta) / tau^2`, explicit constant: pure-DP transfer.
    TransferPure,
    /// `48 ln(4/beta) / tau^2`, explicit constant: approximate-DP transfer.
    TransferApprox,
    /// `ln(2/beta) / (2 tau^2)`, explicit constant: one fixed query by Hoeffding.
    NaiveNonAdaptive,
}

impl SampleSizeFormula {
    pub const ALL: [SampleSizeFormula; 15] = [
        SampleSizeFormula::LaplacePure,
        SampleSizeFormula::LaplaceApprox,
        SampleSizeFormula::LaplaceStatistical,
        SampleSizeFormula::LaplaceStatisticalApprox,
        SampleSizeFormula::PmwPure,
        SampleSizeFormula::PmwApprox,
        SampleSizeFormula::PmwStatistical,
        SampleSizeFormula::PmwStatisticalApprox,
        SampleSizeFormula::SparsePure,
        SampleSizeFormula::SparseApprox,
        SampleSizeFormula::RoundsStatistical,
        SampleSizeFormula::EffectiveRoundsInput,
        SampleSizeFormula::TransferPure,
        SampleSizeFormula::TransferApprox,
        SampleSizeFormula::NaiveNonAdaptive,
    ];

    pub fn name(self) -> &'static str {
        use SampleSizeFormula::*;
        match self {
            LaplacePure => "laplace-pure",
            LaplaceApprox => "laplace-approx",
            LaplaceStatistical => "laplace-statistical",
            LaplaceStatisticalApprox => "laplace-statistical-approx",
            PmwPure => "pmw-pure",
            PmwApprox => "pmw-approx",
            PmwStatistical => "pmw-statistical",
            PmwStatisticalApprox => "pmw-statistical-approx",
            SparsePure => "sparse-pure",
            SparseApprox => "sparse-approx",
            RoundsStatistical => "rounds-statistical",
            EffectiveRoundsInput => "effective-rounds-input",
            TransferPure => "transfer-pure",
            TransferApprox => "transfer-approx",
            NaiveNonAdaptive => "naive-non-adaptive",
        }
    }

    pub fn expression(self) -> &'static str {
        use SampleSizeFormula::*;
        match self {
            LaplacePure => "m ln(1/beta)/(eps tau)",
            LaplaceApprox => "sqrt(m ln(1/delta)) ln(1/beta)/(eps tau)",
            LaplaceStatistical => "m ln(1/beta)/tau^2",
            LaplaceStatisticalApprox => "sqrt(m) ln(1/beta)^1.5/tau^2.5",
            PmwPure => "ln|X| ln(1/beta)/(eps tau^3)",
            PmwApprox => "sqrt(ln|X| ln(1/delta)) ln(1/beta)/(eps tau^2)",
            PmwStatistical => "ln|X| ln(1/beta)/tau^4",
            PmwStatisticalApprox => "sqrt(ln|X|) ln(1/beta)^1.5/tau^3.5",
            SparsePure => "9 r ln(4/beta)/(tau eps)",
            SparseApprox => "(sqrt(512)+1) sqrt(r ln(2/delta)) ln(4/beta)/(tau eps)",
            RoundsStatistical => "r ln(1/beta)/tau^2",
            EffectiveRoundsInput => "1156 r ln(12/beta)/tau^2",
            TransferPure => "12 ln(4/beta)/tau^2",
            TransferApprox => "48 ln(4/beta)/tau^2",
            NaiveNonAdaptive => "ln(2/beta)/(2 tau^2)",
        }
    }

    /// Whether the formula carries its own constant (the multiplier is then 1).
    pub fn has_explicit_constant(self) -> bool {
        use SampleSizeFormula::*;
        matches!(
            self,
            SparsePure
                | SparseApprox
                | EffectiveRoundsInput
                | TransferPure
                | TransferApprox
                | NaiveNonAdaptive
        )
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Inputs to [`required_sample_size`]. Unused fields may be `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizingParams {
    pub tau: f64,
    pub beta: f64,
    pub m: Option<u64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub ln_universe: Option<f64>,
    pub r: Option<u64>,
    pub c: f64,
}

impl SizingParams {
    pub fn new(tau: f64, beta: f64) -> Self {
        SizingParams {
            tau,
            beta,
            m: None,
            epsilon: None,
            delta: None,
            ln_universe: None,
            r: None,
            c: DEFAULT_C,
        }
    }
}

/// `ceil(C * formula)`, with `C = 1` for formulas with explicit constants.
pub fn required_sample_size(
    formula: SampleSizeFormula,
    p: &SizingParams,
) -> Result<u64, PrivacyError> {
    let raw = formula_value(formula, p)?;
    let c = if formula.has_explicit_constant() {
        1.0
    } else {
        p.c
    };
    let n = (c * raw).ceil();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(PrivacyError::InvalidParameter {
            name: "n",
            reason: format!("{n} does not fit a sample size"),
        });
    }
    Ok(n as u64)
}

/// The formula value before the constant and the ceiling.
pub fn formula_value(formula: SampleSizeFormula, p: &SizingParams) -> Result<f64, PrivacyError> {
    use SampleSizeFormula::*;
    let name = formula.name();
    unit("tau", p.tau)?;
    unit("beta", p.beta)?;
    if !(p.c > 0.0 && p.c.is_finite()) {
        return Err(PrivacyError::InvalidParameter {
            name: "C",
            reason: format!("must be positive, got {}", p.c),
        });
    }
    let need = |v: Option<f64>, field: &'static str| {
        v.ok_or(PrivacyError::MissingParameter {
            formula: name,
            name: field,
        })
    };
    let m = || need(p.m.map(|m| m as f64), "m").and_then(|m| positive("m", m));
    let r = || need(p.r.map(|r| r as f64), "r").and_then(|r| positive("r", r));
    let eps = || need(p.epsilon, "epsilon").and_then(|e| positive("epsilon", e));
    let delta = || need(p.delta, "delta").and_then(|d| unit("delta", d).map(|_| d));
    let ln_x = || need(p.ln_universe, "ln_universe").and_then(|l| positive("ln_universe", l));
    let (tau, beta) = (p.tau, p.beta);
    let lb = (1.0 / beta).ln();
    Ok(match formula {
        LaplacePure => m()? * lb / (eps()? * tau),
        LaplaceApprox => (m()? * (1.0 / delta()?).ln()).sqrt() * lb / (eps()? * tau),
        LaplaceStatistical => m()? * lb / (tau * tau),
        LaplaceStatisticalApprox => m()?.sqrt() * lb.powf(1.5) / tau.powf(2.5),
        PmwPure => ln_x()? * lb / (eps()? * tau.powi(3)),
        PmwApprox => (ln_x()? * (1.0 / delta()?).ln()).sqrt() * lb / (eps()? * tau * tau),
        PmwStatistical => ln_x()? * lb / tau.powi(4),
        PmwStatisticalApprox => ln_x()?.sqrt() * lb.powf(1.5) / tau.powf(3.5),
        SparsePure => 9.0 * r()? * (4.0 / beta).ln() / (tau * eps()?),
        SparseApprox => {
            (512f64.sqrt() + 1.0) * (r()? * (2.0 / delta()?).ln()).sqrt() * (4.0 / beta).ln()
                / (tau * eps()?)
        }
        RoundsStatistical => r()? * lb / (tau * tau),
        EffectiveRoundsInput => 1156.0 * r()? * (12.0 / beta).ln() / (tau * tau),
        TransferPure => 12.0 * (4.0 / beta).ln() / (tau * tau),
        TransferApprox => 48.0 * (4.0 / beta).ln() / (tau * tau),
        NaiveNonAdaptive => (2.0 / beta).ln() / (2.0 * tau * tau),
    })
}

fn unit(name: &'static str, v: f64) -> Result<(), PrivacyError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(PrivacyError::InvalidParameter {
            name,
            reason: format!("must lie in (0, 1), got {v}"),
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64, PrivacyError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(PrivacyError::InvalidParameter {
            name,
            reason: format!("must be positive, got {v}"),
        })
    }
}
