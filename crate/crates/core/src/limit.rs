//! Time integration of the limit Keller–Segel systems reached as `ε → 0`.

use crate::error::{Error, Result};
use crate::field::{solve_helmholtz, solve_poisson_meanzero, Axis, Field2D};
use crate::hyperbolic::chem_flow;
use crate::model::{
    dealiased_divergence, gprime_scalar, pressure_g, ModelParams, ScalingVariant, State,
};
use crate::timeloop::{self, Evolving, Observer, SimOptions, TrajectorySummary};

/// Largest CFL number accepted by [`limit_step`]. The dealiased spectrum of
/// the diffusion operator reaches `≈ 8.8 D N²`, and SSP-RK3 is stable on the
/// negative real axis up to `≈ 2.5`.
pub const LIMIT_CFL_MAX: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub rho: Field2D,
    /// Chemical field; slaved to `ρ` except in the fully parabolic limit.
    pub c: Field2D,
    pub t: f64,
}

impl Evolving for LimitState {
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

/// The chemical field the limit system attaches to `ρ`: Helmholtz for the
/// first and third scalings (the latter as initial data), mean-zero Poisson
/// for the second.
pub fn slaved_chemical(rho: &Field2D, params: &ModelParams) -> Result<Field2D> {
    match params.variant {
        ScalingVariant::SecondPoisson => Ok(solve_poisson_meanzero(rho, params.alpha)),
        _ => solve_helmholtz(rho, params.alpha, params.beta),
    }
}

impl LimitState {
    pub fn from_density(rho: Field2D, params: &ModelParams) -> Result<Self> {
        let c = slaved_chemical(&rho, params)?;
        Ok(LimitState { rho, c, t: 0.0 })
    }

    /// Presents the limit state in hyperbolic variables with the Darcy
    /// momentum `ρ(∇c − ∇g(ρ))`.
    pub fn to_state(&self, params: &ModelParams) -> Result<State> {
        let (vx, vy) = darcy_velocity(&self.rho, &self.c, params)?;
        State::new(
            self.rho.clone(),
            &self.rho * &vx,
            &self.rho * &vy,
            self.c.clone(),
            self.t,
        )
    }
}

fn darcy_velocity(rho: &Field2D, c: &Field2D, params: &ModelParams) -> Result<(Field2D, Field2D)> {
    let g = pressure_g(rho, params.gamma)?;
    let mut phi = c.to_spectral();
    phi = phi.add(&g.to_spectral().dealias().scale(-1.0));
    Ok((
        phi.derivative(Axis::X).to_field(),
        phi.derivative(Axis::Y).to_field(),
    ))
}

/// `−∇·(ρ ∇(c − g(ρ)))`. Under the Poisson coupling the chemical field is
/// re-solved from `ρ`, so the supplied `c` only matters up to its gradient.
pub fn limit_rhs(rho: &Field2D, c: &Field2D, params: &ModelParams) -> Result<Field2D> {
    rho.same_grid(c)?;
    let min = rho.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let (vx, vy) = match params.variant {
        ScalingVariant::SecondPoisson => {
            darcy_velocity(rho, &solve_poisson_meanzero(rho, params.alpha), params)?
        }
        _ => darcy_velocity(rho, c, params)?,
    };
    Ok(-&dealiased_divergence(&(rho * &vx), &(rho * &vy)))
}

/// `cfl · Δx² / (2 max ρg'(ρ) + Δx max |∇c|)`.
pub fn limit_stable_dt(state: &LimitState, params: &ModelParams, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::param(
            "cfl",
            format!("must lie in (0, 1], got {cfl}"),
        ));
    }
    let min = state.rho.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let diff = state
        .rho
        .data()
        .iter()
        .map(|&r| r * gprime_scalar(r, params.gamma))
        .fold(0.0, f64::max);
    let cs = state.c.to_spectral();
    let cx = cs.derivative(Axis::X).to_field();
    let cy = cs.derivative(Axis::Y).to_field();
    let drift = cx
        .data()
        .iter()
        .zip(cy.data())
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    let h = state.rho.spacing();
    let denom = 2.0 * diff + h * drift;
    if !(denom.is_finite()) {
        return Err(Error::NonFinite {
            what: "limit speed",
        });
    }
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(cfl * h * h / denom)
}

fn advance_density(
    rho: &Field2D,
    c: Option<&Field2D>,
    params: &ModelParams,
    dt: f64,
) -> Result<Field2D> {
    let [out] = timeloop::ssp_rk3(&[rho], dt, |u| {
        let r = u[0];
        let rhs = match c {
            Some(c) => limit_rhs(r, c, params)?,
            None => match params.variant {
                ScalingVariant::SecondPoisson => limit_rhs(r, r, params)?,
                _ => limit_rhs(r, &slaved_chemical(r, params)?, params)?,
            },
        };
        Ok([rhs])
    })?;
    Ok(out)
}

/// One step. The slaved chemical field is recomputed at every Runge–Kutta
/// stage; the parabolic chemical equation is Strang-split around the
/// density update and integrated exactly per mode.
pub fn limit_step(state: &LimitState, params: &ModelParams, dt: f64) -> Result<LimitState> {
    state.rho.ensure_finite("rho")?;
    let min = state.rho.min();
    if min < params.rho_floor {
        return Err(Error::DensityFloor {
            min,
            floor: params.rho_floor,
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    let limit = limit_stable_dt(state, params, LIMIT_CFL_MAX)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStep { dt, limit });
    }
    let (rho, c) = match params.variant {
        ScalingVariant::ThirdParabolic => {
            let half = 0.5 * dt;
            let (c1, _) = chem_flow(
                &state.c.to_spectral(),
                &state.rho.to_spectral(),
                params,
                half,
                None,
            );
            let c1 = c1.to_field();
            let rho = advance_density(&state.rho, Some(&c1), params, dt)?;
            let (c2, _) = chem_flow(&c1.to_spectral(), &rho.to_spectral(), params, half, None);
            (rho, c2.to_field())
        }
        _ => {
            let rho = advance_density(&state.rho, None, params, dt)?;
            let c = slaved_chemical(&rho, params)?;
            (rho, c)
        }
    };
    rho.ensure_finite("rho")?;
    c.ensure_finite("c")?;
    let min = rho.min();
    if min < params.rho_floor {
        return Err(Error::DensityFloor {
            min,
            floor: params.rho_floor,
        });
    }
    Ok(LimitState {
        rho,
        c,
        t: state.t + dt,
    })
}

/// Same contract as [`crate::hyperbolic::simulate`]; observers see the
/// state through [`LimitState::to_state`].
pub fn limit_simulate(
    initial: &LimitState,
    params: &ModelParams,
    t_final: f64,
    opts: &SimOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<TrajectorySummary<LimitState>> {
    params.validate()?;
    initial.rho.same_grid(&initial.c)?;
    let cfl = match opts.stepping {
        timeloop::TimeStepping::Cfl(c) => c,
        timeloop::TimeStepping::Fixed(_) => LIMIT_CFL_MAX,
    };
    timeloop::run(
        initial,
        t_final,
        opts,
        |s| limit_stable_dt(s, params, cfl),
        |s, dt| limit_step(s, params, dt),
        |s| {
            if observers.is_empty() {
                return Ok(());
            }
            let st = s.to_state(params)?;
            for o in observers.iter_mut() {
                o.observe(&st, params)?;
            }
            Ok(())
        },
    )
}
