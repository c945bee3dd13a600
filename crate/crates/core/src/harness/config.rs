//! Experiment configuration files.
//!
//! Flat `key = value` lines grouped under `[section]` headers. `#` starts a
//! comment. Sections: `experiment`, `population`, `dataset`, `mechanism`,
//! `strategy`. See the README for the full key list.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use super::HarnessError;
use crate::analysts::{Renormalization, StrategySpec};
use crate::domain::{Population, Universe};
use crate::mechanisms::{MechanismKind, OracleConfig, SplitPlan};
use crate::privacy::{required_sample_size, SampleSizeFormula, SizingParams, DEFAULT_C};

/// Population description as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PopulationSpec {
    /// Uniform over `{0, ..., size - 1}`.
    Uniform {
        size: u64,
    },
    /// Uniform over `{0, 1}^bits`.
    UniformBits {
        bits: u32,
    },
    /// Explicit weights over `{0, ..., len - 1}`.
    Tabulated {
        weights: Vec<f64>,
    },
    BernoulliProduct {
        biases: Vec<f64>,
    },
    Gaussian {
        dim: u32,
    },
}

impl PopulationSpec {
    pub fn build(&self) -> Result<Population, HarnessError> {
        let p = match self {
            PopulationSpec::Uniform { size } => Population::uniform(Universe::indexed(*size)?)?,
            PopulationSpec::UniformBits { bits } => {
                Population::uniform(Universe::bit_vectors(*bits)?)?
            }
            PopulationSpec::Tabulated { weights } => {
                Population::tabulated(Universe::indexed(weights.len() as u64)?, weights.clone())?
            }
            PopulationSpec::BernoulliProduct { biases } => {
                Population::bernoulli_product(biases.clone())?
            }
            PopulationSpec::Gaussian { dim } => Population::standard_gaussian(*dim)?,
        };
        Ok(p)
    }
}

/// How the dataset size was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SizeSource {
    Explicit,
    Formula { formula: SampleSizeFormula },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub population: PopulationSpec,
    pub n: usize,
    pub size_source: SizeSource,
    pub mechanism: OracleConfig,
    pub strategy: StrategySpec,
    pub trials: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Multiplier for sample-size bounds stated up to a constant.
    pub c: f64,
    /// Monte Carlo draws for population values without a closed form.
    pub mc_trials: usize,
    /// Score every answer against the population, not only the final one.
    pub score_all: bool,
    pub notes: String,
}

impl ExperimentConfig {
    /// A config with the given pieces and defaults elsewhere. The mechanism's
    /// query budget is raised to the strategy's query count.
    pub fn new(
        id: &str,
        population: PopulationSpec,
        n: usize,
        mut mechanism: OracleConfig,
        strategy: StrategySpec,
    ) -> Self {
        mechanism.m = mechanism.m.max(strategy.query_count());
        ExperimentConfig {
            id: id.to_string(),
            population,
            n,
            size_source: SizeSource::Explicit,
            mechanism,
            strategy,
            trials: 20,
            seed: 0,
            output: PathBuf::from(format!("{id}.csv")),
            c: DEFAULT_C,
            mc_trials: 2000,
            score_all: false,
            notes: String::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        Parser::default().parse(text)
    }

    /// Checks every piece against its module's preconditions.
    pub fn validate(&self) -> Result<Population, HarnessError> {
        let bad = |key: &str, reason: String| Err(HarnessError::config("", key, 0, reason));
        if self.id.is_empty() || self.id.contains(['\n', '\r']) {
            return bad("experiment.id", "must be a nonempty single line".into());
        }
        if self.n == 0 {
            return bad("dataset.n", "must be >= 1".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("experiment.C", format!("must be positive, got {}", self.c));
        }
        let pop = self.population.build()?;
        self.mechanism.validate()?;
        if self.mechanism.m < self.strategy.query_count() {
            return bad(
                "mechanism.m",
                format!(
                    "{} is below the strategy's {} queries",
                    self.mechanism.m,
                    self.strategy.query_count()
                ),
            );
        }
        if self.mechanism.mechanism == MechanismKind::EffectiveRounds {
            let required = SplitPlan::required_input(
                self.mechanism.r,
                self.mechanism.tau,
                self.mechanism.beta,
            );
            if (self.n as f64) < required {
                return bad(
                    "dataset.n",
                    format!(
                        "{} is below 1156 r ln(12/beta)/tau^2 = {required:.1}",
                        self.n
                    ),
                );
            }
        }
        self.strategy.build(pop.universe(), self.n, 0)?;
        Ok(pop)
    }

    /// Inputs for the sample-size formulas, taken from the mechanism section.
    pub fn sizing_params(&self) -> SizingParams {
        let m = &self.mechanism;
        let universe = self.population.build().ok().map(|p| p.universe());
        SizingParams {
            tau: m.tau,
            beta: m.beta,
            m: Some(m.m as u64),
            epsilon: Some(m.epsilon),
            delta: (m.delta > 0.0).then_some(m.delta),
            ln_universe: universe.and_then(|u| u.ln_size()),
            r: Some(u64::from(m.r)),
            c: self.c,
        }
    }
}

#[derive(Default)]
struct Parser {
    experiment: Vec<(String, String, usize)>,
    population: Vec<(String, String, usize)>,
    dataset: Vec<(String, String, usize)>,
    mechanism: Vec<(String, String, usize)>,
    strategy: Vec<(String, String, usize)>,
}

fn num<T: FromStr>(section: &str, key: &str, line: usize, v: &str) -> Result<T, HarnessError> {
    v.parse()
        .map_err(|_| HarnessError::config(section, key, line, format!("cannot parse {v:?}")))
}

fn list(section: &str, key: &str, line: usize, v: &str) -> Result<Vec<f64>, HarnessError> {
    v.split(',')
        .map(|x| num(section, key, line, x.trim()))
        .collect()
}

fn boolean(section: &str, key: &str, line: usize, v: &str) -> Result<bool, HarnessError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(HarnessError::config(
            section,
            key,
            line,
            format!("not a boolean: {v:?}"),
        )),
    }
}

type Entries = Vec<(String, String, usize)>;

fn take<'a>(entries: &'a Entries, key: &str) -> Option<(&'a str, usize)> {
    entries
        .iter()
        .rev()
        .find(|e| e.0 == key)
        .map(|e| (e.1.as_str(), e.2))
}

fn require<'a>(
    section: &str,
    entries: &'a Entries,
    key: &str,
) -> Result<(&'a str, usize), HarnessError> {
    take(entries, key).ok_or_else(|| HarnessError::config(section, key, 0, "missing".into()))
}

fn reject_unknown(section: &str, entries: &Entries, known: &[&str]) -> Result<(), HarnessError> {
    match entries.iter().find(|e| !known.contains(&e.0.as_str())) {
        Some(e) => Err(HarnessError::config(
            section,
            &e.0,
            e.2,
            format!("unknown key; expected one of {}", known.join(", ")),
        )),
        None => Ok(()),
    }
}

impl Parser {
    fn parse(mut self, text: &str) -> Result<ExperimentConfig, HarnessError> {
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if ![
                    "experiment",
                    "population",
                    "dataset",
                    "mechanism",
                    "strategy",
                ]
                .contains(&section.as_str())
                {
                    return Err(HarnessError::config(
                        &section,
                        "",
                        line_no,
                        "unknown section".into(),
                    ));
                }
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::config(
                    &section,
                    "",
                    line_no,
                    format!("expected key = value, got {line:?}"),
                )
            })?;
            let entry = (k.trim().to_string(), v.trim().to_string(), line_no);
            match section.as_str() {
                "experiment" => self.experiment.push(entry),
                "population" => self.population.push(entry),
                "dataset" => self.dataset.push(entry),
                "mechanism" => self.mechanism.push(entry),
                "strategy" => self.strategy.push(entry),
                _ => {
                    return Err(HarnessError::config(
                        "",
                        &entry.0,
                        line_no,
                        "key outside any section".into(),
                    ))
                }
            }
        }

        let ex = &self.experiment;
        reject_unknown(
            "experiment",
            ex,
            &[
                "id",
                "trials",
                "seed",
                "output",
                "C",
                "mc_trials",
                "score_all",
                "notes",
            ],
        )?;
        let (id, _) = require("experiment", ex, "id")?;
        let population = self.population_spec()?;
        let strategy = self.strategy_spec()?;

        let mut mechanism = OracleConfig::new(MechanismKind::Naive);
        let mut m_given = false;
        for (k, v, line) in &self.mechanism {
            mechanism
                .set(k, v)
                .map_err(|e| HarnessError::config("mechanism", k, *line, e.to_string()))?;
            m_given |= k == "m";
        }
        let explicit_m = mechanism.m;
        let mut cfg = ExperimentConfig::new(id, population, 1, mechanism, strategy);
        cfg.mechanism.m = if m_given {
            explicit_m
        } else {
            cfg.strategy.query_count()
        };
        if let Some((v, l)) = take(ex, "trials") {
            cfg.trials = num("experiment", "trials", l, v)?;
        }
        if let Some((v, l)) = take(ex, "seed") {
            cfg.seed = num("experiment", "seed", l, v)?;
        }
        if let Some((v, _)) = take(ex, "output") {
            cfg.output = PathBuf::from(v);
        }
        if let Some((v, l)) = take(ex, "C") {
            cfg.c = num("experiment", "C", l, v)?;
        }
        if let Some((v, l)) = take(ex, "mc_trials") {
            cfg.mc_trials = num("experiment", "mc_trials", l, v)?;
        }
        if let Some((v, l)) = take(ex, "score_all") {
            cfg.score_all = boolean("experiment", "score_all", l, v)?;
        }
        if let Some((v, _)) = take(ex, "notes") {
            cfg.notes = v.to_string();
        }

        let ds = &self.dataset;
        reject_unknown("dataset", ds, &["n", "size_formula"])?;
        match (take(ds, "n"), take(ds, "size_formula")) {
            (Some(_), Some((_, l))) => {
                return Err(HarnessError::config(
                    "dataset",
                    "size_formula",
                    l,
                    "give either n or size_formula".into(),
                ))
            }
            (Some((v, l)), None) => cfg.n = num("dataset", "n", l, v)?,
            (None, Some((v, l))) => {
                let formula = SampleSizeFormula::parse(v).ok_or_else(|| {
                    HarnessError::config(
                        "dataset",
                        "size_formula",
                        l,
                        format!("unknown formula {v:?}"),
                    )
                })?;
                let n = required_sample_size(formula, &cfg.sizing_params()).map_err(|e| {
                    HarnessError::config("dataset", "size_formula", l, e.to_string())
                })?;
                cfg.n = usize::try_from(n).map_err(|_| {
                    HarnessError::config("dataset", "size_formula", l, format!("{n} is too large"))
                })?;
                cfg.size_source = SizeSource::Formula { formula };
            }
            (None, None) => {
                return Err(HarnessError::config(
                    "dataset",
                    "n",
                    0,
                    "missing (or give size_formula)".into(),
                ))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn population_spec(&self) -> Result<PopulationSpec, HarnessError> {
        const S: &str = "population";
        let p = &self.population;
        let (kind, line) = require(S, p, "kind")?;
        let spec = match kind {
            "uniform" => {
                reject_unknown(S, p, &["kind", "size"])?;
                let (v, l) = require(S, p, "size")?;
                PopulationSpec::Uniform { size: num(S, "size", l, v)? }
            }
            "uniform-bits" => {
                reject_unknown(S, p, &["kind", "bits"])?;
                let (v, l) = require(S, p, "bits")?;
                PopulationSpec::UniformBits { bits: num(S, "bits", l, v)? }
            }
            "tabulated" => {
                reject_unknown(S, p, &["kind", "weights"])?;
                let (v, l) = require(S, p, "weights")?;
                PopulationSpec::Tabulated { weights: list(S, "weights", l, v)? }
            }
            "bernoulli-product" => {
                reject_unknown(S, p, &["kind", "biases"])?;
                let (v, l) = require(S, p, "biases")?;
                PopulationSpec::BernoulliProduct { biases: list(S, "biases", l, v)? }
            }
            "gaussian" => {
                reject_unknown(S, p, &["kind", "dim"])?;
                let (v, l) = require(S, p, "dim")?;
                PopulationSpec::Gaussian { dim: num(S, "dim", l, v)? }
            }
            other => {
                return Err(HarnessError::config(
                    S,
                    "kind",
                    line,
                    format!("unknown population {other:?}; expected uniform, uniform-bits, tabulated, bernoulli-product or gaussian"),
                ))
            }
        };
        Ok(spec)
    }

    fn strategy_spec(&self) -> Result<StrategySpec, HarnessError> {
        const S: &str = "strategy";
        let s = &self.strategy;
        let (kind, line) = require(S, s, "kind")?;
        let get = |key: &str| require(S, s, key);
        Ok(match kind {
            "non-adaptive-random" => {
                reject_unknown(S, s, &["kind", "m"])?;
                let (v, l) = get("m")?;
                StrategySpec::NonAdaptiveRandom { m: num(S, "m", l, v)? }
            }
            "sign-aggregation" => {
                reject_unknown(S, s, &["kind", "d", "truncation"])?;
                let (v, l) = get("d")?;
                let truncation = take(s, "truncation").map(|(v, l)| num(S, "truncation", l, v)).transpose()?;
                StrategySpec::SignAggregation { d: num(S, "d", l, v)?, truncation }
            }
            "reconstruction-probe" => {
                reject_unknown(S, s, &["kind", "m_probe", "quantile", "renormalization", "width"])?;
                let (v, l) = get("m_probe")?;
                let m_probe = num(S, "m_probe", l, v)?;
                let quantile = take(s, "quantile").map(|(v, l)| num(S, "quantile", l, v)).transpose()?.unwrap_or(0.5);
                let renormalization = match take(s, "renormalization") {
                    None | Some(("min-max", _)) => Renormalization::MinMax,
                    Some(("clamped", l)) => {
                        let (v, wl) = get("width").map_err(|_| HarnessError::config(S, "width", l, "required for clamped".into()))?;
                        Renormalization::Clamped { width: num(S, "width", wl, v)? }
                    }
                    Some((other, l)) => {
                        return Err(HarnessError::config(S, "renormalization", l, format!("expected min-max or clamped, got {other:?}")))
                    }
                };
                StrategySpec::ReconstructionProbe { m_probe, quantile, renormalization }
            }
            "round-structured" => {
                reject_unknown(S, s, &["kind", "r", "per_round"])?;
                let (rv, rl) = get("r")?;
                let (pv, pl) = get("per_round")?;
                StrategySpec::RoundStructured { r: num(S, "r", rl, rv)?, per_round: num(S, "per_round", pl, pv)? }
            }
            other => {
                return Err(HarnessError::config(
                    S,
                    "kind",
                    line,
                    format!("unknown strategy {other:?}; expected non-adaptive-random, sign-aggregation, reconstruction-probe or round-structured"),
                ))
            }
        })
    }
}
