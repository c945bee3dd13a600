//! Running an experiment and writing its CSV and metadata sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::{ExperimentConfig, HarnessError};
use crate::domain::io::format_float;
use crate::mechanisms::{MechanismKind, SplitPlan};
use crate::privacy::{formula_value, required_sample_size, SampleSizeFormula};
use crate::verify::{run_trials, TrialOutcome, TrialSpec};
use crate::TOOL_VERSION;

/// CSV header with the unit of each column.
pub const CSV_COLUMNS: [(&str, &str); 21] = [
    ("experiment_id", "label"),
    ("trial", "index"),
    ("stream", "rng stream id"),
    ("final_reported", "query value in [0,1]; empty for Bottom"),
    ("final_true", "query value in [0,1]"),
    ("final_true_se", "query value; 0 when exact"),
    ("final_empirical", "query value in [0,1], full dataset"),
    ("final_gap", "|final_reported - final_true|"),
    ("violation", "|final_true - final_empirical| > tau"),
    (
        "answer_violations",
        "count of scored answers off by more than tau",
    ),
    ("scored_answers", "count"),
    ("rounds_detected", "count"),
    ("epsilon_spent", "nats"),
    ("delta_spent", "probability"),
    ("answered", "count of queries answered"),
    ("completed", "strategy finished without refusal"),
    ("halted", "session halted"),
    (
        "final_reported_unscaled",
        "raw function scale (sign aggregation only)",
    ),
    (
        "final_true_unscaled",
        "raw function scale (sign aggregation only)",
    ),
    (
        "final_true_unscaled_se",
        "raw function scale (sign aggregation only)",
    ),
    (
        "final_empirical_raw",
        "untruncated raw mean on the dataset (sign aggregation only)",
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub trials: usize,
    pub completed: usize,
    pub halted: usize,
    /// Trials whose final query has a population value and an empirical value.
    pub scored: usize,
    pub violations: usize,
    /// Trials with `final_gap > tau`.
    pub gap_exceeds_tau: usize,
    pub mean_final_reported: Option<f64>,
    pub mean_final_true: Option<f64>,
    pub mean_final_gap: Option<f64>,
    pub mean_reported_unscaled: Option<f64>,
    pub mean_true_unscaled: Option<f64>,
    /// Standard error of `mean_true_unscaled` from the Monte Carlo errors.
    pub mean_true_unscaled_se: Option<f64>,
    pub mean_empirical_raw: Option<f64>,
    pub scored_answers: usize,
    pub answer_violations: usize,
    pub max_epsilon_spent: f64,
    pub max_rounds_detected: u32,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl ExperimentSummary {
    pub fn from_outcomes(outcomes: &[TrialOutcome], tau: f64) -> Self {
        let unscaled: Vec<_> = outcomes.iter().filter_map(|o| o.unscaled).collect();
        ExperimentSummary {
            trials: outcomes.len(),
            completed: outcomes.iter().filter(|o| o.completed).count(),
            halted: outcomes.iter().filter(|o| o.halted).count(),
            scored: outcomes
                .iter()
                .filter(|o| o.violation(tau).is_some())
                .count(),
            violations: outcomes
                .iter()
                .filter(|o| o.violation(tau) == Some(true))
                .count(),
            gap_exceeds_tau: outcomes
                .iter()
                .filter(|o| o.final_gap().is_some_and(|g| g > tau))
                .count(),
            mean_final_reported: mean(outcomes.iter().filter_map(|o| o.final_reported)),
            mean_final_true: mean(outcomes.iter().filter_map(|o| o.final_true)),
            mean_final_gap: mean(outcomes.iter().filter_map(|o| o.final_gap())),
            mean_reported_unscaled: mean(unscaled.iter().filter_map(|u| u.reported)),
            mean_true_unscaled: mean(unscaled.iter().map(|u| u.true_value)),
            mean_true_unscaled_se: (!unscaled.is_empty()).then(|| {
                unscaled
                    .iter()
                    .map(|u| u.true_std_error * u.true_std_error)
                    .sum::<f64>()
                    .sqrt()
                    / unscaled.len() as f64
            }),
            mean_empirical_raw: mean(unscaled.iter().map(|u| u.empirical_raw)),
            scored_answers: outcomes.iter().map(|o| o.scored_answers).sum(),
            answer_violations: outcomes.iter().map(|o| o.answer_violations(tau)).sum(),
            max_epsilon_spent: outcomes.iter().map(|o| o.epsilon_spent).fold(0.0, f64::max),
            max_rounds_detected: outcomes
                .iter()
                .map(|o| o.rounds_detected)
                .max()
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub outcomes: Vec<TrialOutcome>,
    pub summary: ExperimentSummary,
    pub csv: Vec<u8>,
    pub metadata: serde_json::Value,
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn render_csv(id: &str, outcomes: &[TrialOutcome], tau: f64) -> Result<Vec<u8>, HarnessError> {
    let err = |e: csv::Error| HarnessError::Domain(crate::domain::DomainError::Csv(e.to_string()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS.iter().map(|c| c.0))
        .map_err(err)?;
    for o in outcomes {
        let u = o.unscaled;
        w.write_record([
            id.to_string(),
            o.trial.to_string(),
            o.stream.to_string(),
            opt(o.final_reported),
            opt(o.final_true),
            opt(o.final_true_std_error),
            opt(o.final_empirical),
            opt(o.final_gap()),
            o.violation(tau).map(|v| v.to_string()).unwrap_or_default(),
            o.answer_violations(tau).to_string(),
            o.scored_answers.to_string(),
            o.rounds_detected.to_string(),
            format_float(o.epsilon_spent),
            format_float(o.delta_spent),
            o.answered.to_string(),
            o.completed.to_string(),
            o.halted.to_string(),
            opt(u.and_then(|u| u.reported)),
            opt(u.map(|u| u.true_value)),
            opt(u.map(|u| u.true_std_error)),
            opt(u.map(|u| u.empirical_raw)),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io {
        path: "<memory>".into(),
        reason: e.to_string(),
    })
}

fn formula_table(cfg: &ExperimentConfig) -> Vec<serde_json::Value> {
    let p = cfg.sizing_params();
    SampleSizeFormula::ALL
        .iter()
        .map(
            |&f| match (formula_value(f, &p), required_sample_size(f, &p)) {
                (Ok(v), Ok(n)) => json!({
                    "formula": f.name(),
                    "expression": f.expression(),
                    "explicit_constant": f.has_explicit_constant(),
                    "value": v,
                    "required_n": n,
                }),
                (Err(e), _) | (_, Err(e)) => json!({
                    "formula": f.name(),
                    "expression": f.expression(),
                    "unavailable": e.to_string(),
                }),
            },
        )
        .collect()
}

/// Runs every trial of `cfg` and renders the results without touching disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let population = cfg.validate()?;
    let started = Instant::now();
    let spec = TrialSpec {
        population: population.clone(),
        n: cfg.n,
        strategy: cfg.strategy.clone(),
        mc_trials: cfg.mc_trials,
        score_all: cfg.score_all,
        fresh_baseline: false,
    };
    let outcomes = run_trials(&cfg.mechanism, &spec, cfg.trials, cfg.seed)?;
    let wall = started.elapsed().as_secs_f64();
    let tau = cfg.mechanism.tau;
    let csv = render_csv(&cfg.id, &outcomes, tau)?;
    let summary = ExperimentSummary::from_outcomes(&outcomes, tau);

    let m = &cfg.mechanism;
    let (calibrated_n, split) = if m.mechanism == MechanismKind::EffectiveRounds {
        let plan = SplitPlan::new(cfg.n, m.r, m.tau, m.beta)?;
        (plan.holdout_size, Some(plan))
    } else {
        (cfg.n, None)
    };
    let calibration = m.calibrate(calibrated_n, population.universe().ln_size());
    let metadata = json!({
        "tool_version": TOOL_VERSION,
        "experiment_id": cfg.id,
        "master_seed": cfg.seed,
        "trials": cfg.trials,
        "stream_ids": (0..cfg.trials as u64).collect::<Vec<_>>(),
        "stream_rule": "trial i draws from stream i of the master seed",
        "config": cfg,
        "population": population.describe(),
        "calibration": calibration,
        "split": split,
        "C": cfg.c,
        "formulas": formula_table(cfg),
        "log_base": "natural logarithms in every formula",
        "delta_note": "the (eps, delta) transfer bound uses delta = exp(-4 ln(8/beta)/tau) as stated; its proof uses exp(-2 ln(4/beta)/tau)",
        "columns": CSV_COLUMNS.iter().map(|(name, unit)| json!({ "name": name, "unit": unit })).collect::<Vec<_>>(),
        "summary": summary,
        "wall_time_seconds": wall,
    });
    Ok(ExperimentResult {
        config: cfg.clone(),
        outcomes,
        summary,
        csv,
        metadata,
    })
}

/// `<output>` with its extension replaced by `meta.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("meta.json")
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| HarnessError::io(path, "not a file path"))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(HarnessError::io(path, e));
    }
    Ok(())
}

/// Runs the experiment and writes the CSV to `cfg.output` and the metadata
/// to [`sidecar_path`]. Nothing is written unless every trial finished.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let result = execute(cfg)?;
    let meta = serde_json::to_vec_pretty(&result.metadata)
        .map_err(|e| HarnessError::io(&cfg.output, e))?;
    write_atomic(&sidecar_path(&cfg.output), &meta)?;
    write_atomic(&cfg.output, &result.csv)?;
    Ok(result)
}
