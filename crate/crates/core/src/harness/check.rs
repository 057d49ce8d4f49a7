//! The invariant suite on small grids. Everything here is deterministic so
//! repeated runs write byte-identical CSVs.

use super::config::RunConfig;
use super::initial::{make_initial_data, random_smooth};
use crate::diagnostics::{trudinger_moser_gap, EnergyMonitor};
use crate::error::Result;
use crate::field::{solve_helmholtz, solve_poisson_meanzero, Field2D, TWO_PI};
use crate::hyperbolic::{simulate, stable_dt, step};
use crate::limit::{limit_simulate, LimitState};
use crate::model::{assemble_linear_coeffs, stationary_state, ModelParams, ScalingVariant, State};
use crate::picard::{run_iteration, single_mode_data, PicardConfig};
use crate::timeloop::SimOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    /// Pass when `value <= threshold`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
    pub files: Vec<PathBuf>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "name,value,threshold,pass")?;
        for i in &self.items {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{}",
                i.name, i.value, i.threshold, i.pass
            )?;
        }
        Ok(())
    }
}

struct Suite(Vec<CheckItem>);

impl Suite {
    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.0.push(CheckItem {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        });
    }
}

fn max_diff(a: &Field2D, b: &Field2D) -> f64 {
    (a - b).max_abs()
}

fn state_drift(a: &State, b: &State) -> f64 {
    max_diff(&a.rho, &b.rho)
        .max(max_diff(&a.m, &b.m))
        .max(max_diff(&a.n, &b.n))
        .max(max_diff(&a.c, &b.c))
}

fn elliptic_checks(s: &mut Suite) -> Result<()> {
    let n = 32;
    let shape = Field2D::from_fn(n, |x, y| (TWO_PI * (x + 2.0 * y)).cos());
    let lam = TWO_PI * TWO_PI * 5.0;
    let (alpha, beta) = (1.5, 2.0);
    let c = solve_helmholtz(&shape, alpha, beta)?;
    s.at_most(
        "helmholtz_single_mode",
        max_diff(&c, &(&shape * (alpha / (lam + beta)))),
        1e-10,
    );
    let p = solve_poisson_meanzero(&shape, alpha);
    s.at_most(
        "poisson_single_mode",
        max_diff(&p, &(&shape * (alpha / lam))),
        1e-10,
    );
    Ok(())
}

fn fixed_point_checks(s: &mut Suite) -> Result<()> {
    for variant in ScalingVariant::ALL {
        let params = ModelParams::new(variant, 1.0, 1.0, 2.0, 0.2)?;
        let initial = stationary_state(&params, 1.0, 8)?;
        let dt = stable_dt(&initial, &params, 0.5)?;
        let mut st = initial.clone();
        for _ in 0..200 {
            st = step(&st, &params, dt)?;
        }
        s.at_most(
            format!("fixed_point_{}", variant.name()),
            state_drift(&st, &initial),
            1e-11,
        );
    }
    Ok(())
}

fn mass_and_timeseries(
    cfg: &RunConfig,
    s: &mut Suite,
    dir: &std::path::Path,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    for variant in ScalingVariant::ALL {
        let mut c = cfg.clone();
        c.variant = variant;
        c.n = 16;
        c.epsilon = vec![0.25];
        let params = c.params(0.25)?;
        let (initial, _) = make_initial_data(&c, 0.25)?;
        let mut mon = EnergyMonitor::new();
        let run = simulate(
            &initial,
            &params,
            0.05,
            &SimOptions::cfl(0.4),
            &mut [&mut mon],
        )?;
        let name = variant.name();
        s.at_most(
            format!("mass_drift_{name}"),
            (run.final_mass - run.initial_mass).abs(),
            1e-12,
        );
        if variant == ScalingVariant::SecondPoisson {
            let e0 = mon.reports[0].energy.abs().max(f64::MIN_POSITIVE);
            s.at_most(
                "poisson_energy_balance_rel",
                mon.max_abs_residual() / e0,
                1e-5,
            );
        }
        let path = dir.join(format!("check_timeseries_{name}.csv"));
        mon.write_csv(BufWriter::new(File::create(&path)?))?;
        files.push(path);

        let li = LimitState::from_density(initial.rho.clone(), &params)?;
        let lrun = limit_simulate(&li, &params, 0.01, &SimOptions::cfl(0.4), &mut [])?;
        s.at_most(
            format!("limit_mass_drift_{name}"),
            (lrun.final_mass - lrun.initial_mass).abs(),
            1e-12,
        );
    }
    Ok(())
}

fn symmetrizer_check(s: &mut Suite) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let gamma = rng.random_range(0.5..3.0);
        let eps = rng.random_range(0.05..1.0);
        let params = ModelParams::new(ScalingVariant::First, 1.0, 1.0, gamma, eps)?;
        let seed: u64 = rng.random();
        let rho = random_smooth(8, seed)?.map(|v| 1.0 + 0.9 * v);
        let v1 = random_smooth(8, seed ^ 1)?;
        let v2 = random_smooth(8, seed ^ 2)?;
        let st = State::from_velocity(rho, &v1, &v2, Field2D::zeros(8), 0.0)?;
        let lc = assemble_linear_coeffs(&st, &params)?;
        let (d1, d2) = lc.symmetry_defect();
        worst = worst.max(d1).max(d2);
    }
    s.at_most("symmetrizer_defect", worst, 0.0);
    Ok(())
}

fn picard_check(s: &mut Suite) -> Result<()> {
    let params = ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.0, 0.5)?;
    let pc = PicardConfig {
        t_final: 0.02,
        ..PicardConfig::default()
    };
    let data = single_mode_data(&pc, &params, 8)?;
    let out = run_iteration(&pc, &params, &data)?;
    let last = out
        .records
        .last()
        .map(|r| r.diff_norm)
        .unwrap_or(f64::INFINITY);
    s.at_most("picard_final_difference", last, pc.tol);
    s.at_most("picard_sup_norm", out.max_iterate_norm(), pc.k_radius);
    Ok(())
}

/// Runs the suite with the config's physics and initial-data settings and
/// writes `check.csv` plus one timeseries per variant to `out.dir`.
pub fn run_check(cfg: &RunConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let dir = cfg.out.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut suite = Suite(Vec::new());
    let mut files = Vec::new();
    elliptic_checks(&mut suite)?;
    fixed_point_checks(&mut suite)?;
    mass_and_timeseries(cfg, &mut suite, &dir, &mut files)?;
    symmetrizer_check(&mut suite)?;
    suite.at_most(
        "trudinger_moser_zero",
        trudinger_moser_gap(&Field2D::zeros(16))?.abs(),
        0.0,
    );
    picard_check(&mut suite)?;
    let report = CheckReport {
        items: suite.0,
        files,
    };
    let path = dir.join("check.csv");
    report.write_csv(BufWriter::new(File::create(&path)?))?;
    let mut files = report.files.clone();
    files.push(path);
    Ok(CheckReport { files, ..report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.out.dir = a.path().to_path_buf();
        let ra = run_check(&cfg).unwrap();
        assert!(ra.all_passed(), "{:#?}", ra.items);
        cfg.out.dir = b.path().to_path_buf();
        run_check(&cfg).unwrap();
        for f in &ra.files {
            let name = f.file_name().unwrap();
            assert_eq!(
                std::fs::read(f).unwrap(),
                std::fs::read(b.path().join(name)).unwrap()
            );
        }
    }
}
