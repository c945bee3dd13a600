//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use sqlab::analysts::{Renormalization, StrategySpec};
use sqlab::domain::rng::stream_rng;
use sqlab::domain::{empirical_mean, sample_dataset, Answer, Population, Query, QueryId, Universe};
use sqlab::harness::{execute, run_experiment, ExperimentConfig, PopulationSpec};
use sqlab::mechanisms::{open_session, MechanismKind, OracleConfig, SplitPlan};
use sqlab::privacy::{
    compose_advanced, compose_basic, group_privacy, required_sample_size, PrivacyParams,
    SampleSizeFormula, SizingParams,
};
use sqlab::verify::{
    acceptance_limit, binomial_moment, check_moment_upper_bound, MomentSpec, ACCEPTANCE_ALPHA,
    MOMENT_REL_TOL,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed(name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let ok = out.passed && in_time;
    println!(
        "{} {name}: {} [{:.2}s of {:.0}s{}]",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs_f64(),
        if in_time { "" } else { ", over time" }
    );
    ok
}

fn appendix_a() -> Outcome {
    let (d, n) = (10_000u32, 100usize);
    let mut cfg = ExperimentConfig::new(
        "appendix-a",
        PopulationSpec::Gaussian { dim: d },
        n,
        OracleConfig::new(MechanismKind::Naive),
        StrategySpec::SignAggregation {
            d,
            truncation: None,
        },
    );
    cfg.trials = 20;
    cfg.seed = 1;
    cfg.mc_trials = 1000;
    let res = execute(&cfg).expect("appendix-a runs");
    let s = &res.summary;
    let expected = (2.0 * d as f64 / (std::f64::consts::PI * n as f64)).sqrt();
    let mean = s.mean_reported_unscaled.unwrap_or(f64::NAN);
    let rel = (mean - expected).abs() / expected;
    let truth = s.mean_true_unscaled.unwrap_or(f64::NAN);
    let se = s.mean_true_unscaled_se.unwrap_or(f64::NAN);
    verdict(
        rel <= 0.10 && truth.abs() <= 3.0 * se,
        format!(
            "mean reported {mean:.4} vs {expected:.4} (rel err {rel:.4} <= 0.10); true value {truth:.4} within 3 SE = {:.4} of 0",
            3.0 * se
        ),
    )
}

fn probe_config(
    id: &str,
    kind: MechanismKind,
    n: usize,
    m_probe: usize,
    tau: f64,
) -> ExperimentConfig {
    let strategy = StrategySpec::ReconstructionProbe {
        m_probe,
        quantile: 0.5,
        renormalization: Renormalization::MinMax,
    };
    let mut mech = OracleConfig::new(kind);
    mech.tau = tau;
    mech.beta = 0.05;
    mech.epsilon = tau / 2.0;
    let mut cfg = ExperimentConfig::new(
        id,
        PopulationSpec::Uniform { size: 1024 },
        n,
        mech,
        strategy,
    );
    cfg.trials = 20;
    cfg.seed = 2;
    cfg
}

fn naive_vs_laplace() -> Outcome {
    let tau = 0.2;
    let m_probe = 4000;
    let naive = execute(&probe_config(
        "naive-probe",
        MechanismKind::Naive,
        100,
        m_probe,
        tau,
    ))
    .expect("naive runs");
    let mut sizing = SizingParams::new(tau, 0.05);
    sizing.m = Some(m_probe as u64 + 1);
    let n_lap =
        required_sample_size(SampleSizeFormula::LaplaceStatistical, &sizing).unwrap() as usize;
    let lap = execute(&probe_config(
        "laplace-probe",
        MechanismKind::Laplace,
        n_lap,
        m_probe,
        tau,
    ))
    .expect("laplace runs");
    let naive_over = naive
        .outcomes
        .iter()
        .filter(|o| o.final_gap().is_some_and(|g| g > tau))
        .count();
    let lap_within = lap
        .outcomes
        .iter()
        .filter(|o| o.final_gap().is_some_and(|g| g <= tau))
        .count();
    verdict(
        naive_over >= 18 && lap_within >= 18,
        format!(
            "naive gap > {tau} in {naive_over}/20 (need >= 18, mean gap {:.3}); laplace n={n_lap} gap <= {tau} in {lap_within}/20 (need >= 18, mean gap {:.4})",
            naive.summary.mean_final_gap.unwrap_or(f64::NAN),
            lap.summary.mean_final_gap.unwrap_or(f64::NAN)
        ),
    )
}

fn moment_grid() -> Outcome {
    let mut total = 0;
    let mut failed = Vec::new();
    for n in (10..=200u64).step_by(10) {
        for k in 1..=10u32 {
            for p in [0.0, 0.01, 0.1, 0.5, 0.9, 1.0] {
                let c = check_moment_upper_bound(n, p, k).expect("valid grid point");
                total += 1;
                if !c.holds {
                    failed.push(c);
                }
            }
        }
    }
    let first = failed.first().map(|c| {
        format!(
            "; first: n={} p={} k={} lhs {:.6e} > rhs {:.6e}",
            c.n, c.p, c.k, c.lhs, c.rhs
        )
    });
    verdict(
        failed.is_empty(),
        format!(
            "bound holds at {}/{total} grid points (rel tol {MOMENT_REL_TOL:e}){}",
            total - failed.len(),
            first.unwrap_or_default()
        ),
    )
}

fn exact_moments() -> Outcome {
    let m = binomial_moment(MomentSpec::new(10, 0.5, 2).unwrap()).unwrap();
    let mut worst: f64 = (m - 0.275).abs() / 0.275;
    for (n, p) in [
        (1u64, 0.5),
        (10, 0.3),
        (100, 0.01),
        (1000, 0.9),
        (10_000, 0.37),
    ] {
        let v = binomial_moment(MomentSpec::new(n, p, 1).unwrap()).unwrap();
        worst = worst.max((v - p).abs() / p);
    }
    verdict(
        worst <= 1e-12,
        format!("M_2[B(10,1/2)] = {m:.17}; worst relative error {worst:.2e} <= 1e-12"),
    )
}

fn transfer() -> Outcome {
    let (tau, beta) = (0.2, 0.05);
    let n = required_sample_size(
        SampleSizeFormula::TransferPure,
        &SizingParams::new(tau, beta),
    )
    .unwrap() as usize;
    let strategy = StrategySpec::ReconstructionProbe {
        m_probe: 1000,
        quantile: 0.5,
        renormalization: Renormalization::MinMax,
    };
    let mut mech = OracleConfig::new(MechanismKind::Laplace);
    mech.tau = tau;
    mech.beta = beta;
    mech.epsilon = tau / 2.0;
    mech.m = strategy.query_count();
    let universe = (2 * n as u64).next_power_of_two();
    let pop = Population::uniform(Universe::indexed(universe).unwrap()).unwrap();
    let spec = sqlab::verify::TrialSpec::new(pop, n, strategy);
    let trials = 500;
    let r = sqlab::verify::transfer_check(&mech, &spec, tau, beta, trials, 5)
        .expect("transfer check runs");
    verdict(
        r.passed && r.scored == trials,
        format!(
            "n={n}, |X|={universe}, eps={}: {} violations in {trials} trials, limit {} for rate {beta} at one-sided alpha {ACCEPTANCE_ALPHA}",
            tau / 2.0,
            r.violations,
            r.limit
        ),
    )
}

fn random_table(rng: &mut impl Rng, id: u64, universe: Universe, size: usize) -> Query {
    let table: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
    Query::tabulated(QueryId(id), universe, table).unwrap()
}

fn sparse_vector() -> Outcome {
    let (r, tau, beta, eps) = (3u32, 0.1, 0.05, 0.5);
    let mut sizing = SizingParams::new(tau, beta);
    sizing.r = Some(u64::from(r));
    sizing.epsilon = Some(eps);
    let n = required_sample_size(SampleSizeFormula::SparsePure, &sizing).unwrap() as usize;
    let threshold = 0.2;
    let universe = Universe::indexed(1024).unwrap();
    let pop = Population::uniform(universe).unwrap();
    let (queries, trials, bad) = (200usize, 500u64, 3usize);
    let mut cfg = OracleConfig::new(MechanismKind::SparseVector);
    cfg.tau = tau;
    cfg.beta = beta;
    cfg.epsilon = eps;
    cfg.r = r;
    cfg.threshold = threshold;
    cfg.m = queries;
    let mut violating_trials = 0u64;
    let mut answered_total = 0usize;
    for t in 0..trials {
        let mut rng = stream_rng(6, t);
        let data = sample_dataset(&pop, n, rng.random()).unwrap();
        let mut session = open_session(cfg.clone(), data.clone(), rng.random()).unwrap();
        let mut bad_at: Vec<usize> = Vec::new();
        while bad_at.len() < bad {
            let i = rng.random_range(0..queries);
            if !bad_at.contains(&i) {
                bad_at.push(i);
            }
        }
        let mut violated = false;
        for i in 0..queries {
            let q = random_table(&mut rng, i as u64, universe, 1024);
            let e = empirical_mean(&data, &q).unwrap();
            let guess = if bad_at.contains(&i) {
                if e < 0.5 {
                    e + 0.4
                } else {
                    e - 0.4
                }
            } else {
                e + rng.random_range(-0.05..0.05)
            };
            let Ok(answer) = session.answer_with_guess(&q, guess) else {
                break;
            };
            answered_total += 1;
            violated |= match answer {
                Answer::Bottom => (e - guess).abs() > threshold + tau,
                Answer::Value(a) => (e - a).abs() > tau,
            };
        }
        violating_trials += u64::from(violated);
    }
    let limit = acceptance_limit(trials, beta, ACCEPTANCE_ALPHA).unwrap();
    verdict(
        violating_trials <= limit,
        format!(
            "n={n}, T={threshold}: {violating_trials}/{trials} trials with a contract violation, limit {limit}; mean queries answered {:.1}/{queries}",
            answered_total as f64 / trials as f64
        ),
    )
}

fn effective_rounds() -> Outcome {
    let (r, tau, beta) = (3u32, 0.25, 0.1);
    let n = SplitPlan::required_input(r, tau, beta).ceil() as usize;
    let mut mech = OracleConfig::new(MechanismKind::EffectiveRounds);
    mech.tau = tau;
    mech.beta = beta;
    mech.r = r;
    let mut cfg = ExperimentConfig::new(
        "effective-rounds",
        PopulationSpec::Uniform { size: 1024 },
        n,
        mech,
        StrategySpec::RoundStructured { r, per_round: 10 },
    );
    cfg.trials = 100;
    cfg.seed = 7;
    cfg.score_all = true;
    let res = execute(&cfg).expect("effective rounds runs");
    let s = &res.summary;
    let clean = res
        .outcomes
        .iter()
        .filter(|o| o.completed && !o.halted)
        .count();
    let valid = 1.0 - s.answer_violations as f64 / s.scored_answers.max(1) as f64;
    verdict(
        clean >= 95 && valid >= 1.0 - 3.0 * beta && s.scored_answers > 0,
        format!(
            "n={n}: {clean}/100 trials finished without halt (need >= 95); {}/{} answers within tau (frequency {valid:.4} >= {:.2})",
            s.scored_answers - s.answer_violations,
            s.scored_answers,
            1.0 - 3.0 * beta
        ),
    )
}

fn privacy_algebra() -> Outcome {
    let mut rng = stream_rng(8, 0);
    let mut worst: f64 = 0.0;
    let rel = |a: f64, b: f64| {
        if b == 0.0 {
            a.abs()
        } else {
            (a - b).abs() / b.abs()
        }
    };
    for _ in 0..100 {
        let eps = rng.random_range(0.001..2.0);
        let delta = rng.random_range(0.0..1e-3);
        let k: u32 = rng.random_range(1..50);
        let dp = 10f64.powf(rng.random_range(-12.0..-1.0));
        let p = PrivacyParams::new(eps, delta).unwrap();

        let g = group_privacy(p, k).unwrap();
        worst = worst
            .max(rel(g.epsilon, eps * k as f64))
            .max(rel(g.delta, delta * eps.exp().powi(k as i32 - 1)));

        let charges: Vec<PrivacyParams> = (0..k)
            .map(|i| PrivacyParams::new(eps / (i + 1) as f64, delta).unwrap())
            .collect();
        let b = compose_basic(&charges);
        let want_eps: f64 = (1..=k).map(|i| eps / i as f64).sum();
        worst = worst
            .max(rel(b.epsilon, want_eps))
            .max(rel(b.delta, delta * k as f64));

        let a = compose_advanced(eps, delta, k, dp).unwrap();
        let want = eps * (-2.0 * k as f64 * dp.ln()).sqrt() + k as f64 * eps * (eps.exp() - 1.0);
        worst = worst
            .max(rel(a.epsilon, want))
            .max(rel(a.delta, k as f64 * delta + dp));
    }
    verdict(
        worst <= 1e-12,
        format!("100 random points, worst relative error {worst:.2e} <= 1e-12"),
    )
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("sqlab-acceptance-{}", std::process::id()));
    let mut mech = OracleConfig::new(MechanismKind::Pmw);
    mech.tau = 0.2;
    mech.epsilon = 0.5;
    let mut cfg = ExperimentConfig::new(
        "determinism",
        PopulationSpec::Uniform { size: 256 },
        500,
        mech,
        StrategySpec::ReconstructionProbe {
            m_probe: 100,
            quantile: 0.5,
            renormalization: Renormalization::MinMax,
        },
    );
    cfg.trials = 8;
    cfg.seed = 9;
    cfg.output = dir.join("run.csv");
    run_experiment(&cfg).expect("first run");
    let first = std::fs::read(&cfg.output).unwrap();
    run_experiment(&cfg).expect("second run");
    let second = std::fs::read(&cfg.output).unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        first == second && !first.is_empty(),
        format!(
            "two runs wrote {} and {} bytes, identical: {}",
            first.len(),
            second.len(),
            first == second
        ),
    )
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        timed("1 appendix-a reproduction", secs(30), appendix_a),
        timed(
            "2 naive failure vs laplace success",
            secs(120),
            naive_vs_laplace,
        ),
        timed("3 moment upper bound grid", secs(10), moment_grid),
        timed("4 exact moment oracle", secs(1), exact_moments),
        timed("5 transfer monte carlo", secs(300), transfer),
        timed("6 sparse vector contract", secs(180), sparse_vector),
        timed("7 effective rounds", secs(300), effective_rounds),
        timed("8 privacy algebra", secs(1), privacy_algebra),
        timed("9 determinism", secs(60), determinism),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
