//! Time integration of the rescaled hyperbolic systems.
//!
//! Each step is a Strang splitting: half a step of the stiff sources at
//! frozen density, a full SSP-RK3 step of the convective transport
//! `ρ_t = −∇·m`, `m_t = −∇·(m⊗m/ρ)`, and a second source half step. The
//! source substep carries the pressure together with the relaxation, so the
//! velocity relaxes towards the Darcy law `∇c − ∇g(ρ)` in closed form and
//! the scheme degenerates to the limit dynamics as `ε → 0`.

use crate::error::{Error, Result};
use crate::field::{solve_poisson_meanzero, Field2D, SpectralField2D};
use crate::field::{Axis, TWO_PI};
use crate::model::{
    conservative_divergence, dealiased_gradient, gprime_scalar, pressure_g, ModelParams,
    ScalingVariant, State,
};
use crate::timeloop::{self, Evolving, Observer, SimOptions, TrajectorySummary};

impl Evolving for State {
    fn time(&self) -> f64 {
        self.t
    }
    fn rho_min(&self) -> f64 {
        self.rho.min()
    }
    fn rho_mass(&self) -> f64 {
        self.rho.mean()
    }
}

/// `(1 − e^{−z}) / z`, continuous at zero.
#[inline]
fn phi1(z: f64) -> f64 {
    if z < 1e-10 {
        1.0 - 0.5 * z
    } else {
        -(-z).exp_m1() / z
    }
}

/// `r ∫₀ʰ e^{−r(h−s)} e^{−μs} ds`, evaluated without cancellation.
#[inline]
fn relaxation_weight(r: f64, mu: f64, h: f64) -> f64 {
    if r >= mu {
        r * h * (-mu * h).exp() * phi1((r - mu) * h)
    } else {
        r * h * (-r * h).exp() * phi1((mu - r) * h)
    }
}

/// Exact flow of `τ c_t = Δc + αρ − βc` over time `h` at frozen `ρ`, per
/// Fourier mode. With `relax_rate = Some(r)` also returns the
/// time-weighted average `∫ r e^{−r(h−s)} c(s) ds` that drives the velocity.
pub(crate) fn chem_flow(
    c: &SpectralField2D,
    rho: &SpectralField2D,
    params: &ModelParams,
    h: f64,
    relax_rate: Option<f64>,
) -> (SpectralField2D, Option<SpectralField2D>) {
    let n = c.n();
    let tau = params.chem_time_scale();
    let (alpha, beta) = (params.alpha, params.beta);
    let mut new = SpectralField2D::zeros(n);
    let mut eff = relax_rate.map(|_| SpectralField2D::zeros(n));
    let b = relax_rate.map(|r| -(-r * h).exp_m1());
    for iy in 0..n {
        let k2 = crate::field::wavenumber(iy, n);
        for ix in 0..n {
            let k1 = crate::field::wavenumber(ix, n);
            let idx = iy * n + ix;
            let kk = TWO_PI * TWO_PI * (k1 * k1 + k2 * k2) as f64;
            let mu = (kk + beta) / tau;
            let c0 = c.coeffs()[idx];
            let ceq = rho.coeffs()[idx] * (alpha / (kk + beta));
            let dev = c0 - ceq;
            new.coeffs_mut()[idx] = ceq + dev * (-mu * h).exp();
            if let (Some(e), Some(r), Some(b)) = (eff.as_mut(), relax_rate, b) {
                e.coeffs_mut()[idx] = ceq * b + dev * relaxation_weight(r, mu, h);
            }
        }
    }
    (new, eff)
}

/// Exact solution over `h` of `ε² v_t = ∇c − p − v` coupled to the chemical
/// equation, with the density (and hence the pressure force `p`) frozen.
/// Returns `(v¹, v², c)` at the end of the substep.
#[allow(clippy::too_many_arguments)]
pub(crate) fn relax(
    v1: &Field2D,
    v2: &Field2D,
    c: &Field2D,
    rho: &Field2D,
    px: &Field2D,
    py: &Field2D,
    params: &ModelParams,
    h: f64,
) -> (Field2D, Field2D, Field2D) {
    let r = 1.0 / (params.epsilon * params.epsilon);
    let a = (-r * h).exp();
    let b = -(-r * h).exp_m1();
    let (c_new, c_eff) = match params.variant {
        ScalingVariant::SecondPoisson => {
            let cs = solve_poisson_meanzero(rho, params.alpha).to_spectral();
            let eff = cs.scale(b);
            (cs, eff)
        }
        _ => {
            let (new, eff) = chem_flow(&c.to_spectral(), &rho.to_spectral(), params, h, Some(r));
            (new, eff.expect("effective chemical field"))
        }
    };
    let gx = c_eff.derivative(Axis::X).to_field();
    let gy = c_eff.derivative(Axis::Y).to_field();
    let mut out1 = Field2D::lincomb(a, v1, -b, px);
    out1.axpy(1.0, &gx);
    let mut out2 = Field2D::lincomb(a, v2, -b, py);
    out2.axpy(1.0, &gy);
    (out1, out2, c_new.to_field())
}

fn source_substep(state: &State, params: &ModelParams, h: f64) -> Result<State> {
    let (v1, v2) = state.velocity();
    let g = pressure_g(&state.rho, params.gamma)?;
    let (px, py) = dealiased_gradient(&g);
    let (v1, v2, c) = relax(&v1, &v2, &state.c, &state.rho, &px, &py, params, h);
    Ok(State {
        m: &state.rho * &v1,
        n: &state.rho * &v2,
        rho: state.rho.clone(),
        c,
        t: state.t,
    })
}

fn transport_substep(state: &State, dt: f64) -> Result<State> {
    let [rho, m, n] = timeloop::ssp_rk3(&[&state.rho, &state.m, &state.n], dt, |u| {
        let min = u[0].min();
        if !(min > 0.0) {
            return Err(Error::DensityFloor { min, floor: 0.0 });
        }
        let (a, b, c) = conservative_divergence(u[0], u[1], u[2], 1.0, None)?;
        Ok([a, b, c])
    })?;
    Ok(State {
        rho,
        m,
        n,
        c: state.c.clone(),
        t: state.t,
    })
}

/// Largest characteristic speed `|v¹| + |v²| + √(ρ g'(ρ))/ε` over the grid.
fn max_speed(state: &State, params: &ModelParams) -> Result<f64> {
    let min = state.rho.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let mut lam: f64 = 0.0;
    let (r, m, n) = (state.rho.data(), state.m.data(), state.n.data());
    for i in 0..r.len() {
        let sound = (r[i] * gprime_scalar(r[i], params.gamma)).sqrt() / params.epsilon;
        lam = lam.max((m[i] / r[i]).abs() + (n[i] / r[i]).abs() + sound);
    }
    if !lam.is_finite() {
        return Err(Error::NonFinite {
            what: "characteristic speed",
        });
    }
    Ok(lam)
}

/// `cfl · Δx / λ_max`. At a constant state with `ρ̃ = 1` the acoustic speed
/// reduces to `√g'(1)/ε`.
pub fn stable_dt(state: &State, params: &ModelParams, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::param(
            "cfl",
            format!("must lie in (0, 1], got {cfl}"),
        ));
    }
    Ok(cfl * state.rho.spacing() / max_speed(state, params)?)
}

/// Advances one Strang step of length `dt`.
pub fn step(state: &State, params: &ModelParams, dt: f64) -> Result<State> {
    state.ensure_finite()?;
    state.check_floor(params.rho_floor)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    let limit = stable_dt(state, params, 1.0)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStep { dt, limit });
    }
    let half = 0.5 * dt;
    let s = source_substep(state, params, half)?;
    let s = transport_substep(&s, dt)?;
    s.check_floor(params.rho_floor)?;
    let mut s = source_substep(&s, params, half)?;
    s.t = state.t + dt;
    s.ensure_finite()?;
    s.check_floor(params.rho_floor)?;
    Ok(s)
}

/// Integrates from `initial.t` over a horizon `t_final`, calling every
/// observer at the schedule of `opts`.
pub fn simulate(
    initial: &State,
    params: &ModelParams,
    t_final: f64,
    opts: &SimOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<TrajectorySummary<State>> {
    params.validate()?;
    initial.ensure_finite()?;
    initial.check_floor(params.rho_floor)?;
    let cfl = match opts.stepping {
        timeloop::TimeStepping::Cfl(c) => c,
        timeloop::TimeStepping::Fixed(_) => 1.0,
    };
    timeloop::run(
        initial,
        t_final,
        opts,
        |s| stable_dt(s, params, cfl),
        |s, dt| step(s, params, dt),
        |s| {
            for o in observers.iter_mut() {
                o.observe(s, params)?;
            }
            Ok(())
        },
    )
}
