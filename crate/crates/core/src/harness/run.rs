//! Single runs with their on-disk outputs.

use super::config::RunConfig;
use super::initial::{make_initial_data, InitialReport};
use crate::diagnostics::{gradc_bound, EnergyMonitor, GradcBound};
use crate::error::{Error, Result};
use crate::field::write_snapshot;
use crate::hyperbolic::simulate;
use crate::limit::{limit_simulate, LimitState};
use crate::model::{ModelParams, ScalingVariant, State};
use crate::picard::{run_iteration, single_mode_data, PicardConfig, PicardOutcome};
use crate::timeloop::{Observer, SimOptions};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Hyperbolic,
    Limit,
}

/// Writes `rho_NNNNN.f2d` and `c_NNNNN.f2d` at the first observation past
/// each multiple of `every`. With `every = 0` it writes nothing; the final
/// state is written separately.
#[derive(Debug, Clone)]
pub struct SnapshotWriter {
    dir: PathBuf,
    every: f64,
    next: f64,
    pub written: Vec<PathBuf>,
}

impl SnapshotWriter {
    pub fn new(dir: impl Into<PathBuf>, every: f64) -> Self {
        SnapshotWriter {
            dir: dir.into(),
            every,
            next: 0.0,
            written: Vec::new(),
        }
    }

    fn write(&mut self, state: &State, tag: &str) -> Result<()> {
        for (name, field) in [("rho", &state.rho), ("c", &state.c)] {
            let path = self.dir.join(format!("{name}_{tag}.f2d"));
            write_snapshot(BufWriter::new(File::create(&path)?), field, state.t)?;
            self.written.push(path);
        }
        Ok(())
    }

    pub fn write_final(&mut self, state: &State) -> Result<()> {
        self.write(state, "final")
    }
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, state: &State, _params: &ModelParams) -> Result<()> {
        if self.every > 0.0 && state.t >= self.next * (1.0 - 1e-12) {
            let tag = format!("{:05}", self.written.len() / 2);
            self.write(state, &tag)?;
            while self.next <= state.t * (1.0 + 1e-12) {
                self.next += self.every;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub initial: InitialReport,
    pub monitor: EnergyMonitor,
    pub steps: usize,
    pub min_rho: f64,
    pub mass_drift: f64,
    pub final_state: State,
    /// Final-time ∇c bound terms, second scaling only.
    pub gradc: Option<GradcBound>,
    pub files: Vec<PathBuf>,
}

fn prepare_dir(dir: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.txt"), cfg.to_text())?;
    Ok(())
}

/// One run at the first ε of the config. Writes `config.txt`,
/// `timeseries.csv` and density/chemical snapshots to `out.dir`.
pub fn run_single(cfg: &RunConfig, solver: Solver) -> Result<RunOutcome> {
    cfg.validate()?;
    let eps = cfg.epsilon[0];
    let params = cfg.params(eps)?;
    let (initial, report) = make_initial_data(cfg, eps)?;
    let dir = cfg.out.dir.clone();
    prepare_dir(&dir, cfg)?;
    let mut monitor = EnergyMonitor::new();
    let mut snaps = SnapshotWriter::new(&dir, cfg.out.snapshot_every);
    let opts = SimOptions::cfl(cfg.cfl).observe_every(cfg.out.observe_every);
    let (final_state, steps, min_rho, mass_drift) = match solver {
        Solver::Hyperbolic => {
            let s = simulate(
                &initial,
                &params,
                cfg.t_final,
                &opts,
                &mut [&mut monitor, &mut snaps],
            )?;
            (
                s.final_state,
                s.steps,
                s.min_rho,
                s.final_mass - s.initial_mass,
            )
        }
        Solver::Limit => {
            let li = LimitState::from_density(initial.rho.clone(), &params)?;
            let opts = SimOptions {
                stepping: crate::timeloop::TimeStepping::Cfl(super::sweep::limit_cfl(cfg)),
                ..opts
            };
            let s = limit_simulate(
                &li,
                &params,
                cfg.t_final,
                &opts,
                &mut [&mut monitor, &mut snaps],
            )?;
            (
                s.final_state.to_state(&params)?,
                s.steps,
                s.min_rho,
                s.final_mass - s.initial_mass,
            )
        }
    };
    snaps.write_final(&final_state)?;
    let gradc = if cfg.variant == ScalingVariant::SecondPoisson {
        let kappa = cfg.kappa_for(final_state.rho.mean());
        Some(gradc_bound(
            &final_state.rho,
            &final_state.c,
            params.gamma,
            kappa,
        )?)
    } else {
        None
    };
    let ts = dir.join("timeseries.csv");
    monitor.write_csv(BufWriter::new(File::create(&ts)?))?;
    let mut files = vec![dir.join("config.txt"), ts];
    files.extend(snaps.written);
    Ok(RunOutcome {
        initial: report,
        monitor,
        steps,
        min_rho,
        mass_drift,
        final_state,
        gradc,
        files,
    })
}

pub fn picard_config(cfg: &RunConfig) -> PicardConfig {
    PicardConfig {
        rho_tilde: cfg.ic.rho_base,
        k_radius: cfg.picard.k_radius,
        delta: cfg.picard.delta,
        t_final: cfg.t_final,
        lambda: None,
        s_norm: 4.0,
        max_iters: cfg.picard.max_iters,
        tol: cfg.picard.tol,
        cfl: cfg.cfl,
    }
}

/// Picard iteration from single-mode data of size `picard.delta`; writes
/// `picard.csv` to `out.dir`.
pub fn run_picard(cfg: &RunConfig) -> Result<PicardOutcome> {
    cfg.validate()?;
    if cfg.variant != ScalingVariant::First {
        return Err(Error::Config {
            field: "variant".into(),
            reason: "the Picard scheme runs with the first scaling".into(),
        });
    }
    let params = cfg.params(cfg.epsilon[0])?;
    let pc = picard_config(cfg);
    let data = single_mode_data(&pc, &params, cfg.n)?;
    let outcome = run_iteration(&pc, &params, &data)?;
    prepare_dir(&cfg.out.dir, cfg)?;
    outcome.write_csv(BufWriter::new(File::create(
        cfg.out.dir.join("picard.csv"),
    )?))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::read_snapshot;
    use crate::harness::config::IcKind;

    #[test]
    fn constant_run_has_flat_timeseries() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.n = 8;
        cfg.t_final = 0.01;
        cfg.ic.kind = IcKind::Constant;
        cfg.out.dir = dir.path().to_path_buf();
        let out = run_single(&cfg, Solver::Hyperbolic).unwrap();
        let rows = out.monitor.rows();
        assert!(rows.len() > 2);
        assert!(rows
            .iter()
            .all(|r| r.potential == rows[0].potential && r.kinetic == 0.0));
        let (rho, t) = read_snapshot(std::io::BufReader::new(
            File::open(dir.path().join("rho_final.f2d")).unwrap(),
        ))
        .unwrap();
        assert_eq!(t, 0.01);
        assert_eq!(rho, out.final_state.rho);
    }

    #[test]
    fn snapshot_cadence() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.n = 8;
        cfg.t_final = 0.02;
        cfg.out.snapshot_every = 0.01;
        cfg.out.dir = dir.path().to_path_buf();
        let out = run_single(&cfg, Solver::Limit).unwrap();
        let snaps = out
            .files
            .iter()
            .filter(|p| p.to_string_lossy().contains("rho_0"))
            .count();
        assert_eq!(snaps, 3);
    }
}
