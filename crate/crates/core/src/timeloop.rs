//! Step-size policy and the observation schedule shared by both solvers.

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStepping {
    /// Recompute the stable step every step with this CFL number.
    Cfl(f64),
    /// Constant step; still checked against the stability limit.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub stepping: TimeStepping,
    /// Time between observations; 0 observes every step. The initial and
    /// final states are always observed.
    pub observe_every: f64,
    pub max_steps: usize,
}

impl SimOptions {
    pub fn cfl(cfl: f64) -> Self {
        SimOptions {
            stepping: TimeStepping::Cfl(cfl),
            observe_every: 0.0,
            max_steps: usize::MAX,
        }
    }

    pub fn fixed(dt: f64) -> Self {
        SimOptions {
            stepping: TimeStepping::Fixed(dt),
            observe_every: 0.0,
            max_steps: usize::MAX,
        }
    }

    pub fn observe_every(mut self, every: f64) -> Self {
        self.observe_every = every;
        self
    }

    pub fn max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.stepping {
            TimeStepping::Cfl(c) if !(c > 0.0 && c < 1.0) => {
                return Err(Error::param("cfl", format!("must lie in (0, 1), got {c}")))
            }
            TimeStepping::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::param("dt", format!("must be > 0, got {dt}")))
            }
            _ => {}
        }
        if !(self.observe_every >= 0.0) {
            return Err(Error::param("observe_every", "must be >= 0"));
        }
        Ok(())
    }
}

/// Receives the state at scheduled times. Limit-solver runs present their
/// state with the Darcy momentum `ρ(∇c − ∇g(ρ))`.
pub trait Observer {
    fn observe(&mut self, state: &State, params: &ModelParams) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(&State, &ModelParams) -> Result<()>,
{
    fn observe(&mut self, state: &State, params: &ModelParams) -> Result<()> {
        self(state, params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary<S> {
    pub final_state: S,
    pub steps: usize,
    pub observations: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Smallest density over all accepted steps.
    pub min_rho: f64,
}

pub(crate) trait Evolving: Clone {
    fn time(&self) -> f64;
    fn rho_min(&self) -> f64;
    fn rho_mass(&self) -> f64;
}

/// Drives `step` from the initial time to `t_final`. The last step is
/// shortened to land on `t_final`; observation times are never hit exactly.
pub(crate) fn run<S: Evolving>(
    initial: &S,
    t_final: f64,
    opts: &SimOptions,
    mut stable_dt: impl FnMut(&S) -> Result<f64>,
    mut step: impl FnMut(&S, f64) -> Result<S>,
    mut observe: impl FnMut(&S) -> Result<()>,
) -> Result<TrajectorySummary<S>> {
    opts.validate()?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::param("T", format!("must be >= 0, got {t_final}")));
    }
    let t0 = initial.time();
    let end = t0 + t_final;
    let initial_mass = initial.rho_mass();
    let mut min_rho = initial.rho_min();
    let mut state = initial.clone();
    observe(&state)?;
    let mut observations = 1;
    let mut next_obs = t0 + opts.observe_every;
    let mut steps = 0usize;
    let mut t = t0;
    while t < end {
        if steps >= opts.max_steps {
            return Err(Error::Precondition(format!(
                "step budget of {} exhausted at t = {t}",
                opts.max_steps
            )));
        }
        let dt = match opts.stepping {
            TimeStepping::Cfl(_) => stable_dt(&state).map_err(|e| e.at_time(t))?,
            TimeStepping::Fixed(dt) => dt,
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonFinite { what: "time step" }.at_time(t));
        }
        // Absorb a round-off sliver instead of taking a ~1e-16 step.
        let t_next = if end - t <= dt * (1.0 + 1e-9) {
            end
        } else {
            t + dt
        };
        state = step(&state, t_next - t).map_err(|e| e.at_time(t))?;
        t = t_next;
        steps += 1;
        min_rho = min_rho.min(state.rho_min());
        let last = t >= end;
        if last || opts.observe_every == 0.0 || t >= next_obs * (1.0 - 1e-12) {
            observe(&state).map_err(|e| e.at_time(t))?;
            observations += 1;
            while opts.observe_every > 0.0 && next_obs <= t * (1.0 + 1e-12) {
                next_obs += opts.observe_every;
            }
        }
    }
    Ok(TrajectorySummary {
        final_mass: state.rho_mass(),
        final_state: state,
        steps,
        observations,
        initial_mass,
        min_rho,
    })
}

/// One SSP-RK3 (Shu–Osher) step for a system of fields.
pub(crate) fn ssp_rk3<const K: usize>(
    u: &[&crate::field::Field2D; K],
    dt: f64,
    mut rhs: impl FnMut(&[&crate::field::Field2D; K]) -> Result<[crate::field::Field2D; K]>,
) -> Result<[crate::field::Field2D; K]> {
    use crate::field::Field2D;
    let k1 = rhs(u)?;
    let u1: [Field2D; K] = std::array::from_fn(|i| {
        let mut v = u[i].clone();
        v.axpy(dt, &k1[i]);
        v
    });
    let k2 = rhs(&std::array::from_fn(|i| &u1[i]))?;
    let u2: [Field2D; K] = std::array::from_fn(|i| {
        let mut v = Field2D::lincomb(0.75, u[i], 0.25, &u1[i]);
        v.axpy(0.25 * dt, &k2[i]);
        v
    });
    let k3 = rhs(&std::array::from_fn(|i| &u2[i]))?;
    Ok(std::array::from_fn(|i| {
        let mut v = Field2D::lincomb(1.0 / 3.0, u[i], 2.0 / 3.0, &u2[i]);
        v.axpy(2.0 / 3.0 * dt, &k3[i]);
        v
    }))
}
