//! The relaxation study: hyperbolic runs over a decreasing ε list against
//! one limit run from the same density.

use super::config::RunConfig;
use super::initial::make_initial_data;
use crate::diagnostics::{compare_to_limit, ConvergenceTable};
use crate::error::Result;
use crate::field::Field2D;
use crate::hyperbolic::simulate;
use crate::limit::{limit_simulate, LimitState, LIMIT_CFL_MAX};
use crate::timeloop::SimOptions;
use rayon::prelude::*;

/// Outcome of one hyperbolic member run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub epsilon: f64,
    /// Final density, or the failure message.
    pub final_rho: std::result::Result<Field2D, String>,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: ConvergenceTable,
    pub limit_rho: Field2D,
    pub limit_steps: usize,
    pub members: Vec<SweepMember>,
}

/// Error table of final densities against a reference; failed members
/// keep their message.
pub fn tabulate(
    epsilons: &[f64],
    finals: &[std::result::Result<Field2D, String>],
    reference: &Field2D,
) -> Result<ConvergenceTable> {
    let entries = epsilons
        .iter()
        .zip(finals)
        .map(|(&e, f)| {
            let errs = match f {
                Ok(rho) => compare_to_limit(rho, reference).map_err(|e| e.to_string()),
                Err(msg) => Err(msg.clone()),
            };
            (e, errs)
        })
        .collect();
    ConvergenceTable::new(entries)
}

/// The CFL number used for the limit reference: the configured one, capped
/// below the parabolic bound.
pub fn limit_cfl(cfg: &RunConfig) -> f64 {
    cfg.cfl.min(0.8 * LIMIT_CFL_MAX)
}

fn run_member(cfg: &RunConfig, epsilon: f64) -> SweepMember {
    let run = || -> Result<(Field2D, usize)> {
        let (initial, _) = make_initial_data(cfg, epsilon)?;
        let params = cfg.params(epsilon)?;
        let summary = simulate(
            &initial,
            &params,
            cfg.t_final,
            &SimOptions::cfl(cfg.cfl),
            &mut [],
        )?;
        Ok((summary.final_state.rho, summary.steps))
    };
    match run() {
        Ok((rho, steps)) => SweepMember {
            epsilon,
            final_rho: Ok(rho),
            steps,
        },
        Err(e) => SweepMember {
            epsilon,
            final_rho: Err(e.to_string()),
            steps: 0,
        },
    }
}

/// Runs every ε member (in parallel) and the limit system once, then
/// compares final densities. A failing member marks its row; a failing
/// limit run fails the sweep.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let params = cfg.params(cfg.epsilon[0])?;
    let (initial, _) = make_initial_data(cfg, cfg.epsilon[0])?;
    let limit_initial = LimitState::from_density(initial.rho.clone(), &params)?;
    let limit = limit_simulate(
        &limit_initial,
        &params,
        cfg.t_final,
        &SimOptions::cfl(limit_cfl(cfg)),
        &mut [],
    )?;
    let members: Vec<SweepMember> = cfg
        .epsilon
        .par_iter()
        .map(|&e| run_member(cfg, e))
        .collect();
    let finals: Vec<_> = members.iter().map(|m| m.final_rho.clone()).collect();
    let table = tabulate(&cfg.epsilon, &finals, &limit.final_state.rho)?;
    Ok(SweepOutcome {
        table,
        limit_rho: limit.final_state.rho,
        limit_steps: limit.steps,
        members,
    })
}
