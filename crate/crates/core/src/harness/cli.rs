//! Command-line interface.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use super::{
    execute, run_experiment, ExperimentConfig, ExperimentResult, HarnessError, PopulationSpec,
    SizeSource,
};
use crate::analysts::{Renormalization, StrategySpec};
use crate::domain::io::format_float;
use crate::domain::{Population, Universe};
use crate::mechanisms::{MechanismKind, OracleConfig};
use crate::privacy::{
    formula_value, required_sample_size, SampleSizeFormula, SizingParams, DEFAULT_C,
};
use crate::verify::{
    binomial_tail_ge, check_bernoulli_domination, check_moment_upper_bound, chernoff_mult_bound,
    hoeffding_bound, markov_moment_tail, mcdiarmid_bound, transfer_check, BoundedLaw, TrialSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sqlab",
    version,
    about = "Adaptive statistical-query experiments"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file. For experiments this is the CSV; the sidecar sits next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format on stdout (or in --out for reports).
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run { config: PathBuf },
    /// Evaluate every sample-size formula.
    Sizes(SizesArgs),
    /// Numeric checks of binomial moments, tail bounds and transfer.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Reconstruction attack against one mechanism.
    Attack(AttackArgs),
    /// Canned demonstrations.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Debug, Args)]
struct SizesArgs {
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// `|X|`; its natural log feeds the PMW formulas.
    #[arg(long)]
    universe_size: Option<f64>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long = "C", default_value_t = DEFAULT_C)]
    c: f64,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Binomial moment, its upper bound, the Markov tail and Bernoulli domination.
    Moments(MomentArgs),
    /// Moment upper bound over the desk-scale grid plus bound-vs-exact-tail checks.
    Bounds,
    /// Monte Carlo transfer check on the final query of a strategy.
    Transfer(TransferArgs),
}

#[derive(Debug, Args)]
struct MomentArgs {
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Enables the Markov tail rows.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum, default_value_t = Law::UniformScaled)]
    law: Law,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Law {
    Bernoulli,
    Constant,
    UniformScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransferStrategy {
    ReconstructionProbe,
    NonAdaptiveRandom,
}

#[derive(Debug, Args)]
struct TransferArgs {
    #[arg(long, default_value = "laplace")]
    mechanism: String,
    #[arg(long, value_enum, default_value_t = TransferStrategy::ReconstructionProbe)]
    strategy: TransferStrategy,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Defaults to tau / 2.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Defaults to ceil(12 ln(4/beta) / tau^2).
    #[arg(long)]
    n: Option<usize>,
    /// Defaults to the smallest power of two at least 2n.
    #[arg(long)]
    universe: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    m_probe: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AttackTarget {
    Naive,
    Laplace,
    Pmw,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(value_enum)]
    mechanism: AttackTarget,
    /// Defaults to 100 for naive and to the statistical sizing bound otherwise.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    universe: u64,
    #[arg(long, default_value_t = 4000)]
    m_probe: usize,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Defaults to tau / 2.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "C", default_value_t = DEFAULT_C)]
    c: f64,
}

#[derive(Debug, Subcommand)]
enum DemoCommand {
    /// Sign-aggregation overfitting of Gaussian data through the naive oracle.
    AppendixA(AppendixArgs),
}

#[derive(Debug, Args)]
struct AppendixArgs {
    #[arg(long, default_value_t = 10_000)]
    d: u32,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    mc_trials: usize,
}

/// A report: named columns and JSON-typed cells.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format_float(f),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn render(&self, format: Format) -> Result<Vec<u8>, HarnessError> {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(Vec::new());
                let err = |e: csv::Error| HarnessError::Io {
                    path: "<report>".into(),
                    reason: e.to_string(),
                };
                w.write_record(&self.columns).map_err(err)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(cell)).map_err(err)?;
                }
                w.into_inner().map_err(|e| HarnessError::Io {
                    path: "<report>".into(),
                    reason: e.to_string(),
                })
            }
            Format::Json => {
                let objs: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            self.columns
                                .iter()
                                .map(|c| c.to_string())
                                .zip(r.iter().cloned())
                                .collect(),
                        )
                    })
                    .collect();
                let mut v = serde_json::to_vec_pretty(&objs).map_err(|e| HarnessError::Io {
                    path: "<report>".into(),
                    reason: e.to_string(),
                })?;
                v.push(b'\n');
                Ok(v)
            }
        }
    }
}

const CHECK_COLUMNS: [&str; 7] = [
    "check_id",
    "parameters",
    "lhs",
    "rhs",
    "holds",
    "trials",
    "violations",
];

struct Ctx<'a> {
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
    stdout: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn say(&mut self, line: &str) -> Result<(), HarnessError> {
        writeln!(self.stdout, "{line}").map_err(|e| HarnessError::Io {
            path: "<stdout>".into(),
            reason: e.to_string(),
        })
    }

    /// Writes a report to `--out` if given, otherwise to stdout.
    fn emit(&mut self, table: &Table) -> Result<(), HarnessError> {
        let bytes = table.render(self.format)?;
        match &self.out {
            Some(path) => fs::write(path, bytes).map_err(|e| HarnessError::io(path, e)),
            None => self.stdout.write_all(&bytes).map_err(|e| HarnessError::Io {
                path: "<stdout>".into(),
                reason: e.to_string(),
            }),
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            } else {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_VALIDATION
            };
        }
    };
    let mut ctx = Ctx {
        seed: cli.seed,
        trials: cli.trials,
        out: cli.out,
        format: cli.format,
        stdout,
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&mut ctx, &config),
        Command::Sizes(a) => cmd_sizes(&mut ctx, &a),
        Command::Verify(VerifyCommand::Moments(a)) => cmd_moments(&mut ctx, &a),
        Command::Verify(VerifyCommand::Bounds) => cmd_bounds(&mut ctx),
        Command::Verify(VerifyCommand::Transfer(a)) => cmd_transfer(&mut ctx, &a),
        Command::Attack(a) => cmd_attack(&mut ctx, &a),
        Command::Demo(DemoCommand::AppendixA(a)) => cmd_appendix(&mut ctx, &a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_INTERNAL
            }
        }
    }
}

fn summary_table(res: &ExperimentResult) -> Table {
    let s = &res.summary;
    let mut t = Table::new(&["experiment_id", "metric", "value"]);
    let id = json!(res.config.id);
    let mut add = |k: &str, v: Value| t.rows.push(vec![id.clone(), json!(k), v]);
    add("n", json!(res.config.n));
    add("trials", json!(s.trials));
    add("completed", json!(s.completed));
    add("halted", json!(s.halted));
    add("violations", json!(s.violations));
    add("gap_exceeds_tau", json!(s.gap_exceeds_tau));
    add("mean_final_reported", json!(s.mean_final_reported));
    add("mean_final_true", json!(s.mean_final_true));
    add("mean_final_gap", json!(s.mean_final_gap));
    if s.mean_reported_unscaled.is_some() {
        add("mean_reported_unscaled", json!(s.mean_reported_unscaled));
        add("mean_true_unscaled", json!(s.mean_true_unscaled));
        add("mean_true_unscaled_se", json!(s.mean_true_unscaled_se));
    }
    add("scored_answers", json!(s.scored_answers));
    add("answer_violations", json!(s.answer_violations));
    add("max_epsilon_spent", json!(s.max_epsilon_spent));
    add("max_rounds_detected", json!(s.max_rounds_detected));
    t
}

/// Runs an experiment; writes files only when `--out` or the config names them.
fn finish_experiment(
    ctx: &mut Ctx,
    cfg: &ExperimentConfig,
    write: bool,
) -> Result<ExperimentResult, HarnessError> {
    let res = if write {
        run_experiment(cfg)?
    } else {
        execute(cfg)?
    };
    let bytes = summary_table(&res).render(ctx.format)?;
    ctx.stdout.write_all(&bytes).map_err(|e| HarnessError::Io {
        path: "<stdout>".into(),
        reason: e.to_string(),
    })?;
    Ok(res)
}

fn cmd_run(ctx: &mut Ctx, path: &PathBuf) -> Result<i32, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| {
        HarnessError::config("", "", 0, format!("cannot read {}: {e}", path.display()))
    })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    if let Some(t) = ctx.trials {
        cfg.trials = t;
    }
    if let Some(o) = ctx.out.clone() {
        cfg.output = o;
    }
    finish_experiment(ctx, &cfg, true)?;
    Ok(EXIT_OK)
}

fn cmd_sizes(ctx: &mut Ctx, a: &SizesArgs) -> Result<i32, HarnessError> {
    let p = SizingParams {
        tau: a.tau,
        beta: a.beta,
        m: a.m,
        epsilon: a.epsilon,
        delta: a.delta,
        ln_universe: a.universe_size.map(f64::ln),
        r: a.r,
        c: a.c,
    };
    let mut t = Table::new(&["formula", "expression", "C", "value", "required_n", "note"]);
    for f in SampleSizeFormula::ALL {
        let c = if f.has_explicit_constant() { 1.0 } else { a.c };
        match (formula_value(f, &p), required_sample_size(f, &p)) {
            (Ok(v), Ok(n)) => t.rows.push(vec![
                json!(f.name()),
                json!(f.expression()),
                json!(c),
                json!(v),
                json!(n),
                Value::Null,
            ]),
            (Err(e), _) | (_, Err(e)) => {
                if matches!(e, crate::privacy::PrivacyError::InvalidParameter { .. }) {
                    return Err(e.into());
                }
                t.rows.push(vec![
                    json!(f.name()),
                    json!(f.expression()),
                    json!(c),
                    Value::Null,
                    Value::Null,
                    json!(e.to_string()),
                ])
            }
        }
    }
    ctx.emit(&t)?;
    Ok(EXIT_OK)
}

fn params(pairs: &[(&str, f64)]) -> Value {
    json!(pairs
        .iter()
        .map(|(k, v)| format!("{k}={}", format_float(*v)))
        .collect::<Vec<_>>()
        .join(";"))
}

fn report_failures(ctx: &mut Ctx, t: &Table, gated: &[bool]) -> Result<i32, HarnessError> {
    let mut failed = 0;
    for (row, gate) in t.rows.iter().zip(gated) {
        if *gate && row[4] == json!(false) {
            failed += 1;
            if failed <= 20 {
                let line = format!(
                    "FAILED {} [{}]: lhs {} exceeds bound {}",
                    cell(&row[0]),
                    cell(&row[1]),
                    cell(&row[2]),
                    cell(&row[3])
                );
                ctx.say(&line)?;
            }
        }
    }
    Ok(if failed > 0 {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

fn cmd_moments(ctx: &mut Ctx, a: &MomentArgs) -> Result<i32, HarnessError> {
    let mut t = Table::new(&CHECK_COLUMNS);
    let mut gated = Vec::new();
    let base = [("n", a.n as f64), ("p", a.p), ("k", a.k as f64)];
    let ub = check_moment_upper_bound(a.n, a.p, a.k)?;
    t.rows.push(vec![
        json!("binomial-moment"),
        params(&base),
        json!(ub.lhs),
        Value::Null,
        Value::Null,
        Value::Null,
        Value::Null,
    ]);
    gated.push(false);
    t.rows.push(vec![
        json!("moment-upper-bound"),
        params(&base),
        json!(ub.lhs),
        json!(ub.rhs),
        json!(ub.holds),
        Value::Null,
        Value::Null,
    ]);
    gated.push(true);

    let law = match a.law {
        Law::Bernoulli => BoundedLaw::Bernoulli,
        Law::Constant => BoundedLaw::Constant,
        Law::UniformScaled => BoundedLaw::UniformScaled,
    };
    let trials = ctx.trials.unwrap_or(100_000);
    let d = check_bernoulli_domination(a.n, a.p, a.k, law, trials, ctx.seed.unwrap_or(0))?;
    t.rows.push(vec![
        json!("bernoulli-domination"),
        json!(format!("{};law={law:?}", cell(&params(&base)))),
        json!(d.estimate),
        json!(d.moment + 3.0 * d.std_error),
        json!(!d.flagged),
        json!(trials),
        json!(u8::from(d.flagged)),
    ]);
    gated.push(true);

    if let Some(tau) = a.tau {
        let mt = markov_moment_tail(a.n, a.p, a.k, a.eps, a.delta, tau)?;
        let p_all = [
            ("n", a.n as f64),
            ("p", a.p),
            ("k", a.k as f64),
            ("eps", a.eps),
            ("delta", a.delta),
            ("tau", tau),
        ];
        let cut = ((a.p + tau) * a.n as f64 - 1e-9).ceil().max(0.0) as u64;
        let exact = binomial_tail_ge(a.n, a.p, cut)? * (a.eps * a.k as f64).exp();
        t.rows.push(vec![
            json!("markov-tail"),
            params(&p_all),
            json!(exact),
            json!(mt.markov),
            json!(exact <= mt.markov),
            Value::Null,
            Value::Null,
        ]);
        gated.push(true);
        for c in &mt.conditions {
            t.rows.push(vec![
                json!(format!("markov-condition:{}", c.name)),
                json!(c.detail),
                Value::Null,
                Value::Null,
                json!(c.holds),
                Value::Null,
                Value::Null,
            ]);
            gated.push(false);
        }
        t.rows.push(vec![
            json!("markov-beta-form"),
            json!(format!(
                "beta={};log log n read as {}",
                format_float(mt.beta),
                mt.log_log_reading
            )),
            Value::Null,
            json!(mt.beta_form),
            Value::Null,
            Value::Null,
            Value::Null,
        ]);
        gated.push(false);
    }
    ctx.emit(&t)?;
    report_failures(ctx, &t, &gated)
}

/// Grid for the moment upper bound: n in 10..=200 step 10, k in 1..=10, six values of p.
const GRID_P: [f64; 6] = [0.0, 0.01, 0.1, 0.5, 0.9, 1.0];

fn cmd_bounds(ctx: &mut Ctx) -> Result<i32, HarnessError> {
    let mut t = Table::new(&CHECK_COLUMNS);
    for n in (10..=200).step_by(10) {
        for k in 1..=10u32 {
            for p in GRID_P {
                let c = check_moment_upper_bound(n, p, k)?;
                t.rows.push(vec![
                    json!("moment-upper-bound"),
                    params(&[("n", n as f64), ("p", p), ("k", k as f64)]),
                    json!(c.lhs),
                    json!(c.rhs),
                    json!(c.holds),
                    Value::Null,
                    Value::Null,
                ]);
            }
        }
    }
    for (n, p, g) in [
        (100usize, 0.5, 0.2),
        (50, 0.1, 1.0),
        (1000, 0.3, 0.1),
        (200, 0.05, 2.5),
    ] {
        let cut = ((1.0 + g) * n as f64 * p - 1e-9).ceil() as u64;
        let exact = binomial_tail_ge(n as u64, p, cut)?;
        let b = chernoff_mult_bound(n, p, g);
        t.rows.push(vec![
            json!("chernoff-vs-exact"),
            params(&[("n", n as f64), ("p", p), ("gamma", g)]),
            json!(exact),
            json!(b),
            json!(exact <= b),
            Value::Null,
            Value::Null,
        ]);
    }
    for (n, tau) in [(100usize, 0.1), (1000, 0.05), (500, 0.02)] {
        // Two-sided tail of a fair-coin mean.
        let hi = ((0.5 + tau) * n as f64 - 1e-9).ceil() as u64;
        let exact = (2.0 * binomial_tail_ge(n as u64, 0.5, hi)?).min(1.0);
        let b = hoeffding_bound(n, tau);
        t.rows.push(vec![
            json!("hoeffding-vs-exact"),
            params(&[("n", n as f64), ("tau", tau)]),
            json!(exact),
            json!(b),
            json!(exact <= b),
            Value::Null,
            Value::Null,
        ]);
        let m = mcdiarmid_bound(n, 1.0 / n as f64, tau);
        let one = binomial_tail_ge(n as u64, 0.5, hi)?;
        t.rows.push(vec![
            json!("mcdiarmid-vs-exact"),
            params(&[("n", n as f64), ("c", 1.0 / n as f64), ("alpha", tau)]),
            json!(one),
            json!(m),
            json!(one <= m),
            Value::Null,
            Value::Null,
        ]);
    }
    ctx.emit(&t)?;
    let gated = vec![true; t.rows.len()];
    report_failures(ctx, &t, &gated)
}

fn pow2_at_least(x: u64) -> u64 {
    x.max(2).next_power_of_two()
}

fn cmd_transfer(ctx: &mut Ctx, a: &TransferArgs) -> Result<i32, HarnessError> {
    let kind: MechanismKind = a.mechanism.parse()?;
    let n = match a.n {
        Some(n) => n,
        None => {
            let p = SizingParams::new(a.tau, a.beta);
            required_sample_size(SampleSizeFormula::TransferPure, &p)? as usize
        }
    };
    let size = a.universe.unwrap_or_else(|| pow2_at_least(2 * n as u64));
    let pop = Population::uniform(Universe::indexed(size)?)?;
    let strategy = match a.strategy {
        TransferStrategy::ReconstructionProbe => StrategySpec::ReconstructionProbe {
            m_probe: a.m_probe,
            quantile: 0.5,
            renormalization: Renormalization::MinMax,
        },
        TransferStrategy::NonAdaptiveRandom => StrategySpec::NonAdaptiveRandom { m: a.m_probe },
    };
    let mut cfg = OracleConfig::new(kind);
    cfg.tau = a.tau;
    cfg.beta = a.beta;
    cfg.epsilon = a.epsilon.unwrap_or(a.tau / 2.0);
    cfg.m = strategy.query_count();
    let spec = TrialSpec::new(pop, n, strategy);
    let trials = ctx.trials.unwrap_or(500);
    let r = transfer_check(&cfg, &spec, a.tau, a.beta, trials, ctx.seed.unwrap_or(0))?;
    let p = json!(format!(
        "mechanism={};strategy={};n={n};universe={size};tau={};beta={};epsilon={}",
        r.mechanism,
        r.strategy,
        format_float(a.tau),
        format_float(a.beta),
        format_float(cfg.epsilon)
    ));
    let mut t = Table::new(&CHECK_COLUMNS);
    t.rows.push(vec![
        json!("transfer"),
        p.clone(),
        json!(r.violations),
        json!(r.limit),
        json!(r.passed),
        json!(trials),
        json!(r.violations),
    ]);
    t.rows.push(vec![
        json!("transfer-fresh-baseline"),
        p,
        json!(r.baseline_violations),
        json!(r.baseline_limit),
        json!(r.baseline_violations <= r.baseline_limit),
        json!(trials),
        json!(r.baseline_violations),
    ]);
    ctx.emit(&t)?;
    report_failures(ctx, &t, &[true, true])
}

fn cmd_attack(ctx: &mut Ctx, a: &AttackArgs) -> Result<i32, HarnessError> {
    let strategy = StrategySpec::ReconstructionProbe {
        m_probe: a.m_probe,
        quantile: 0.5,
        renormalization: Renormalization::MinMax,
    };
    let (kind, formula) = match a.mechanism {
        AttackTarget::Naive => (MechanismKind::Naive, None),
        AttackTarget::Laplace => (
            MechanismKind::Laplace,
            Some(SampleSizeFormula::LaplaceStatistical),
        ),
        AttackTarget::Pmw => (MechanismKind::Pmw, Some(SampleSizeFormula::PmwStatistical)),
    };
    let mut mech = OracleConfig::new(kind);
    mech.tau = a.tau;
    mech.beta = a.beta;
    mech.epsilon = a.epsilon.unwrap_or(a.tau / 2.0);
    mech.m = strategy.query_count();
    let pop = PopulationSpec::Uniform { size: a.universe };
    let mut cfg = ExperimentConfig::new(&format!("attack-{kind}"), pop, 1, mech, strategy);
    cfg.c = a.c;
    cfg.n = match (a.n, formula) {
        (Some(n), _) => n,
        (None, None) => 100,
        (None, Some(f)) => {
            cfg.size_source = SizeSource::Formula { formula: f };
            required_sample_size(f, &cfg.sizing_params())? as usize
        }
    };
    cfg.trials = ctx.trials.unwrap_or(20);
    cfg.seed = ctx.seed.unwrap_or(0);
    let write = ctx.out.is_some();
    if let Some(o) = ctx.out.clone() {
        cfg.output = o;
    }
    finish_experiment(ctx, &cfg, write)?;
    Ok(EXIT_OK)
}

fn cmd_appendix(ctx: &mut Ctx, a: &AppendixArgs) -> Result<i32, HarnessError> {
    let mut cfg = ExperimentConfig::new(
        "appendix-a",
        PopulationSpec::Gaussian { dim: a.d },
        a.n,
        OracleConfig::new(MechanismKind::Naive),
        StrategySpec::SignAggregation {
            d: a.d,
            truncation: None,
        },
    );
    cfg.trials = ctx.trials.unwrap_or(20);
    cfg.seed = ctx.seed.unwrap_or(0);
    cfg.mc_trials = a.mc_trials;
    let write = ctx.out.is_some();
    if let Some(o) = ctx.out.clone() {
        cfg.output = o;
    }
    let res = finish_experiment(ctx, &cfg, write)?;
    let expected = (2.0 * a.d as f64 / (std::f64::consts::PI * a.n as f64)).sqrt();
    let Some(mean) = res.summary.mean_reported_unscaled else {
        ctx.say("FAILED appendix-a: no trial produced a final answer")?;
        return Ok(EXIT_CHECK_FAILED);
    };
    let rel = (mean - expected).abs() / expected;
    let line = format!(
        "appendix-a: mean reported {} vs sqrt(2d/(pi n)) = {} (relative error {})",
        format_float(mean),
        format_float(expected),
        format_float(rel)
    );
    if rel > 0.1 {
        ctx.say(&format!("FAILED {line} exceeds 0.1"))?;
        return Ok(EXIT_CHECK_FAILED);
    }
    ctx.say(&line)?;
    Ok(EXIT_OK)
}
