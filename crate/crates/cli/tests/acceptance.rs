//! Acceptance suite. Every criterion prints one PASS/FAIL line to stderr
//! (uncaptured) and the test fails if any criterion does.

use chemorelax::diagnostics::{trudinger_moser_corpus_max, trudinger_moser_gap, EnergyMonitor};
use chemorelax::field::{solve_helmholtz, solve_poisson_meanzero, TWO_PI};
use chemorelax::harness::initial::random_smooth;
use chemorelax::harness::{make_initial_data, run_sweep, IcKind, RunConfig};
use chemorelax::model::{assemble_linear_coeffs, stationary_state};
use chemorelax::picard::{compare_with_nonlinear, run_iteration, single_mode_data, PicardConfig};
use chemorelax::{
    limit_simulate, limit_stable_dt, limit_step, simulate, stable_dt, step, Field2D, LimitState,
    ModelParams, ScalingVariant, SimOptions, State,
};
use std::io::Write;
use std::path::Path;
use std::process::Command;

/// Frozen from the pilot sweep; the smallest last-pair order over the three
/// variants was 0.655.
const RELAXATION_ORDER_THRESHOLD: f64 = 0.6;
/// Calibrated Trudinger–Moser constant over the seeded corpus.
const TM_CORPUS_MAX: f64 = -5.026913325689933e-1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn config(variant: ScalingVariant, n: usize, kind: IcKind) -> RunConfig {
    let mut c = RunConfig::default();
    c.variant = variant;
    c.n = n;
    c.ic.kind = kind;
    c
}

fn initial(cfg: &RunConfig, eps: f64) -> (State, ModelParams) {
    let (s, _) = make_initial_data(cfg, eps).unwrap();
    (s, cfg.params(eps).unwrap())
}

fn list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn max_diff(a: &Field2D, b: &Field2D) -> f64 {
    (a - b).max_abs()
}

fn elliptic() -> Outcome {
    let n = 32;
    let mut worst: f64 = 0.0;
    for (k1, k2) in [(1.0, 0.0), (1.0, 2.0), (3.0, -2.0), (0.0, 5.0)] {
        let f = Field2D::from_fn(n, |x, y| (TWO_PI * (k1 * x + k2 * y)).sin());
        let lam = TWO_PI * TWO_PI * (k1 * k1 + k2 * k2);
        for (alpha, beta) in [(1.0, 1.0), (2.5, 0.3)] {
            let c = solve_helmholtz(&f, alpha, beta).unwrap();
            worst = worst.max(max_diff(&c, &(&f * (alpha / (lam + beta)))));
        }
        let p = solve_poisson_meanzero(&f, 1.7);
        worst = worst.max(max_diff(&p, &(&f * (1.7 / lam))));
    }
    outcome(worst < 1e-10, format!("max error {worst:.2e} (< 1e-10)"))
}

fn fixed_points() -> Outcome {
    let mut worst: f64 = 0.0;
    for variant in ScalingVariant::ALL {
        for gamma in [0.5, 1.0, 2.0] {
            let params = ModelParams::new(variant, 1.0, 1.0, gamma, 0.1).unwrap();
            let s0 = stationary_state(&params, 1.0, 16).unwrap();
            let dt = stable_dt(&s0, &params, 0.5).unwrap();
            let mut s = s0.clone();
            for _ in 0..1000 {
                s = step(&s, &params, dt).unwrap();
            }
            for (a, b) in [
                (&s.rho, &s0.rho),
                (&s.m, &s0.m),
                (&s.n, &s0.n),
                (&s.c, &s0.c),
            ] {
                worst = worst.max(max_diff(a, b));
            }
        }
    }
    outcome(worst < 1e-11, format!("max drift {worst:.2e} (< 1e-11)"))
}

fn mass_conservation() -> Outcome {
    let cfg = config(ScalingVariant::First, 64, IcKind::TwoMode);
    let (s0, params) = initial(&cfg, 0.1);
    let m0 = s0.rho.mean();
    let dt = stable_dt(&s0, &params, 0.4).unwrap();
    let mut s = s0.clone();
    for _ in 0..10_000 {
        s = step(&s, &params, dt).unwrap();
    }
    let hyper = (s.rho.mean() - m0).abs();
    let mut l = LimitState::from_density(s0.rho.clone(), &params).unwrap();
    let ldt = limit_stable_dt(&l, &params, 0.4).unwrap();
    for _ in 0..10_000 {
        l = limit_step(&l, &params, ldt).unwrap();
    }
    let lim = (l.rho.mean() - m0).abs();
    outcome(
        hyper < 1e-10 && lim < 1e-10,
        format!("drift hyperbolic {hyper:.2e}, limit {lim:.2e} (< 1e-10)"),
    )
}

fn monitored_run(state: &State, params: &ModelParams, t_final: f64, dt: f64) -> EnergyMonitor {
    let mut mon = EnergyMonitor::new();
    simulate(
        state,
        params,
        t_final,
        &SimOptions::fixed(dt),
        &mut [&mut mon],
    )
    .unwrap();
    mon
}

fn orders(r: &[f64]) -> Vec<f64> {
    r.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn energy_first() -> Outcome {
    let cfg = config(ScalingVariant::First, 32, IcKind::TwoMode);
    let (s0, params) = initial(&cfg, 0.25);
    let dt0 = stable_dt(&s0, &params, 0.8).unwrap();
    let res: Vec<f64> = (0..3)
        .map(|l| monitored_run(&s0, &params, 0.1, dt0 / f64::from(1 << l)).max_abs_residual())
        .collect();
    let o = orders(&res);
    let min = o.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        min >= 1.8,
        format!("residuals {}, orders {} (>= 1.8)", list(&res), list(&o)),
    )
}

fn energy_second() -> Outcome {
    let cfg = config(ScalingVariant::SecondPoisson, 32, IcKind::TwoMode);
    let (s0, params) = initial(&cfg, 0.25);
    let dt0 = stable_dt(&s0, &params, 0.8).unwrap();
    let runs: Vec<EnergyMonitor> = (0..3)
        .map(|l| monitored_run(&s0, &params, 0.1, dt0 / f64::from(1 << l)))
        .collect();
    let e0 = runs[0].reports[0].energy;
    let rels: Vec<f64> = runs
        .iter()
        .map(|m| m.max_abs_residual() / e0.abs())
        .collect();
    let rel = rels[2];
    // Monotonicity up to round-off in the energy itself.
    let slack = 1e-13 * e0.abs();
    let rises = runs
        .iter()
        .flat_map(|m| m.reports.windows(2))
        .filter(|w| w[1].energy > w[0].energy + slack)
        .count();
    outcome(
        rel < 1e-6 && rises == 0,
        format!(
            "relative residuals {} (finest < 1e-6), {rises} increases of E",
            list(&rels)
        ),
    )
}

fn gradc_uniform() -> Outcome {
    let cfg = config(ScalingVariant::SecondPoisson, 32, IcKind::TwoMode);
    let sups: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&e| {
            let (s0, params) = initial(&cfg, e);
            let mut mon = EnergyMonitor::new();
            simulate(&s0, &params, 0.25, &SimOptions::cfl(0.4), &mut [&mut mon]).unwrap();
            mon.sup_gradc()
        })
        .collect();
    let mut sorted = sups.clone();
    sorted.sort_by(f64::total_cmp);
    let spread = (sorted[2] - sorted[0]) / sorted[1];
    outcome(
        spread < 0.2,
        format!(
            "sup ||grad c|| {}, spread {spread:.2e} (< 0.2)",
            list(&sups)
        ),
    )
}

fn relaxation() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for variant in ScalingVariant::ALL {
        let mut cfg = config(variant, 64, IcKind::TwoMode);
        cfg.epsilon = vec![0.2, 0.1, 0.05, 0.025];
        let out = run_sweep(&cfg).unwrap();
        let l2: Vec<f64> = out
            .table
            .l2_errors()
            .into_iter()
            .map(|e| e.unwrap_or(f64::NAN))
            .collect();
        let decreasing = l2.windows(2).all(|w| w[1] < w[0]);
        let last = out
            .table
            .rows
            .last()
            .and_then(|r| r.order_l2)
            .unwrap_or(f64::NAN);
        pass &= decreasing && last >= RELAXATION_ORDER_THRESHOLD;
        detail.push(format!("{variant}: l2 {} last order {last:.3}", list(&l2)));
    }
    outcome(
        pass,
        format!(
            "{} (decreasing, last order >= {RELAXATION_ORDER_THRESHOLD})",
            detail.join("; ")
        ),
    )
}

fn picard() -> Outcome {
    let params = ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.0, 0.5).unwrap();
    let pc = PicardConfig::default();
    let data = single_mode_data(&pc, &params, 32).unwrap();
    let out = match run_iteration(&pc, &params, &data) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("iteration failed: {e}")),
    };
    let iters = out.records.len();
    let sup = out.max_iterate_norm();
    let min_rho = out.min_density();
    let agree = compare_with_nonlinear(&out, &params).unwrap();
    outcome(
        out.converged && iters <= 50 && sup <= pc.k_radius && min_rho > 0.5 && agree < 1e-6,
        format!(
            "converged {} in {iters} iterates, sup norm {sup:.2e} (<= 0.2), min rho {min_rho:.4} (> 0.5), nonlinear gap {agree:.2e} (< 1e-6)",
            out.converged
        ),
    )
}

fn symmetrizer() -> Outcome {
    let params = ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.7, 0.3).unwrap();
    let mut worst: f64 = 0.0;
    let mut min_rho = f64::INFINITY;
    for seed in 0..100u64 {
        let rho = random_smooth(16, 3 * seed)
            .unwrap()
            .map(|v| 1.05 + 0.95 * v);
        min_rho = min_rho.min(rho.min());
        let v1 = random_smooth(16, 3 * seed + 1).unwrap();
        let v2 = random_smooth(16, 3 * seed + 2).unwrap();
        let s = State::from_velocity(rho, &v1, &v2, Field2D::zeros(16), 0.0).unwrap();
        let (d1, d2) = assemble_linear_coeffs(&s, &params)
            .unwrap()
            .symmetry_defect();
        worst = worst.max(d1).max(d2);
    }
    outcome(
        worst == 0.0 && min_rho >= 0.1,
        format!("max defect {worst:e} (== 0), min rho {min_rho:.3}"),
    )
}

/// `log ∫ exp|a sin 2πx| dx − a²π/4` by composite Simpson on the two
/// half-periods where the integrand is smooth.
fn tm_oracle(a: f64) -> f64 {
    let m = 20_000;
    let h = 0.5 / m as f64;
    let f = |x: f64| (a * (TWO_PI * x).sin()).exp();
    let mut s = f(0.0) + f(0.5);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    (2.0 * s * h / 3.0).ln() - a * a * std::f64::consts::PI / 4.0
}

fn trudinger_moser() -> Outcome {
    let zero = trudinger_moser_gap(&Field2D::zeros(32)).unwrap();
    let mut worst: f64 = 0.0;
    for a in [0.1, 1.0] {
        for n in [16, 64] {
            let h = Field2D::from_fn(n, |x, _| a * (TWO_PI * x).sin());
            worst = worst.max((trudinger_moser_gap(&h).unwrap() - tm_oracle(a)).abs());
        }
    }
    let corpus: Vec<Field2D> = (0..100u64).map(|s| random_smooth(32, s).unwrap()).collect();
    let max = trudinger_moser_corpus_max(&corpus).unwrap();
    let pinned = (max - TM_CORPUS_MAX).abs() <= 1e-9 * TM_CORPUS_MAX.abs();
    outcome(
        zero == 0.0 && worst < 1e-8 && max.is_finite() && pinned,
        format!("gap(0) = {zero:e}, oracle error {worst:.2e} (< 1e-8), corpus max {max:.15} (pinned {TM_CORPUS_MAX:.15})"),
    )
}

fn porous_medium() -> Outcome {
    let mut cfg = config(ScalingVariant::First, 32, IcKind::SingleMode);
    cfg.alpha = 0.0;
    cfg.ic.amplitude = 0.01;
    let (s0, params) = initial(&cfg, 0.1);
    let mode = |r: &Field2D| {
        2.0 * r
            .zip_map(&Field2D::from_fn(32, |x, _| (TWO_PI * x).cos()), |a, b| {
                a * b
            })
            .mean()
    };
    let t_final = 0.02;
    let l0 = LimitState::from_density(s0.rho.clone(), &params).unwrap();
    let run = limit_simulate(&l0, &params, t_final, &SimOptions::cfl(0.4), &mut []).unwrap();
    let rate = -(mode(&run.final_state.rho) / mode(&s0.rho)).ln() / t_final;
    let expected = TWO_PI * TWO_PI;
    let rel = (rate - expected).abs() / expected;
    outcome(
        rel < 0.05,
        format!("decay rate {rate:.4} vs {expected:.4}, relative gap {rel:.2e} (< 0.05)"),
    )
}

fn run_check(dir: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_chemorelax"))
        .args(["check", "--out-dir"])
        .arg(dir)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if !(run_check(a.path()) && run_check(b.path())) {
        return outcome(false, "check subcommand failed");
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.file_name()))
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    let identical = names
        .iter()
        .all(|n| std::fs::read(a.path().join(n)).ok() == std::fs::read(b.path().join(n)).ok());
    outcome(
        identical && !names.is_empty(),
        format!("{} CSV files compared, identical {identical}", names.len()),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("elliptic and spectral exactness", elliptic),
        ("stationary-state fixed points", fixed_points),
        ("mass conservation", mass_conservation),
        ("energy identity, first scaling", energy_first),
        ("energy balance, second scaling", energy_second),
        ("uniform grad c bound", gradc_uniform),
        ("relaxation convergence", relaxation),
        ("Picard scheme", picard),
        ("symmetrizer algebra", symmetrizer),
        ("Trudinger-Moser monitor", trudinger_moser),
        ("decoupled porous-medium check", porous_medium),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let o = run();
        let _ = writeln!(
            std::io::stderr(),
            "criterion {:>2} {:<32} {} [{:.1}s] {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
