//! Picard iteration for small solutions near a constant state.
//!
//! Iterate `n` solves the linear system whose coefficients are frozen at
//! iterate `n − 1`:
//!
//! ```text
//! ρ_t + v̂·∇ρ + ρ̂ ∇·v = 0
//! v_t + v̂·∇v + (g'(ρ̂)/ε²) ∇ρ = (∇c − v)/ε²
//! ε c_t = Δc + αρ − βc
//! ```
//!
//! Fields are stored as deviations from the constant state `(ρ̃, 0, c̃)`,
//! which keeps the round-off at the scale of the perturbation; the H⁴
//! weights would otherwise amplify it past any useful tolerance.

use crate::error::{Error, Result};
use crate::field::{sobolev_norm, Axis, Field2D, TWO_PI};
use crate::hyperbolic::{self, relax};
use crate::model::{
    assemble_linear_coeffs, gprime_scalar, ConstantState, ModelParams, ScalingVariant, State,
};
use crate::timeloop::SimOptions;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub rho_tilde: f64,
    /// Radius `K ∈ (0, ρ̃/2)` of the admissible ball.
    pub k_radius: f64,
    pub delta: f64,
    pub t_final: f64,
    /// Energy weight; defaults to `(ρ̃+K)² / (ε(ρ̃−K))`.
    pub lambda: Option<f64>,
    pub s_norm: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// CFL number fixing the shared time grid.
    pub cfl: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            rho_tilde: 1.0,
            k_radius: 0.2,
            delta: 1e-3,
            t_final: 0.1,
            lambda: None,
            s_norm: 4.0,
            max_iters: 50,
            tol: 1e-10,
            cfl: 0.4,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_tilde > 0.0) {
            return Err(Error::param("rho_tilde", "must be > 0"));
        }
        if !(self.k_radius > 0.0 && self.k_radius < 0.5 * self.rho_tilde) {
            return Err(Error::param(
                "K",
                format!(
                    "must lie in (0, rho_tilde/2) = (0, {}), got {}",
                    0.5 * self.rho_tilde,
                    self.k_radius
                ),
            ));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::param("delta", "must be >= 0"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("T", "must be >= 0"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        if !(self.s_norm >= 0.0) {
            return Err(Error::param("s_norm", "must be >= 0"));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::param("cfl", "must lie in (0, 1)"));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::param("lambda", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn lambda(&self, epsilon: f64) -> f64 {
        self.lambda.unwrap_or_else(|| {
            let (r, k) = (self.rho_tilde, self.k_radius);
            (r + k) * (r + k) / (epsilon * (r - k))
        })
    }
}

/// Deviation `(ρ − ρ̃, v¹, v², c − c̃)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardFrame {
    pub rho: Field2D,
    pub v1: Field2D,
    pub v2: Field2D,
    pub c: Field2D,
}

impl PicardFrame {
    pub fn zeros(n: usize) -> Self {
        PicardFrame {
            rho: Field2D::zeros(n),
            v1: Field2D::zeros(n),
            v2: Field2D::zeros(n),
            c: Field2D::zeros(n),
        }
    }

    pub fn from_state(state: &State, base: &ConstantState) -> Self {
        let (v1, v2) = state.velocity();
        PicardFrame {
            rho: state.rho.map(|r| r - base.rho_tilde),
            v1,
            v2,
            c: state.c.map(|c| c - base.c_tilde),
        }
    }

    pub fn to_state(&self, base: &ConstantState, t: f64) -> Result<State> {
        let rho = self.rho.map(|r| r + base.rho_tilde);
        State::from_velocity(rho, &self.v1, &self.v2, self.c.map(|c| c + base.c_tilde), t)
    }

    /// `‖ρ̄‖_{Hˢ} + ε‖v‖_{Hˢ} + √ε‖c̄‖_{Hˢ}`.
    pub fn weighted_norm(&self, epsilon: f64, s: f64) -> f64 {
        let v = (sobolev_norm(&self.v1, s).powi(2) + sobolev_norm(&self.v2, s).powi(2)).sqrt();
        sobolev_norm(&self.rho, s) + epsilon * v + epsilon.sqrt() * sobolev_norm(&self.c, s)
    }

    fn difference(&self, other: &PicardFrame) -> PicardFrame {
        PicardFrame {
            rho: &self.rho - &other.rho,
            v1: &self.v1 - &other.v1,
            v2: &self.v2 - &other.v2,
            c: &self.c - &other.c,
        }
    }

    fn ensure_finite(&self) -> Result<()> {
        self.rho.ensure_finite("rho")?;
        self.v1.ensure_finite("v1")?;
        self.v2.ensure_finite("v2")?;
        self.c.ensure_finite("c")
    }
}

fn check_params(params: &ModelParams) -> Result<()> {
    if params.variant != ScalingVariant::First {
        return Err(Error::Precondition(format!(
            "the Picard scheme is built for the first scaling, got {}",
            params.variant
        )));
    }
    Ok(())
}

fn coefficient_density(prev: &PicardFrame, base: &ConstantState) -> Result<Field2D> {
    let rho_hat = prev.rho.map(|r| r + base.rho_tilde);
    let min = rho_hat.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    Ok(rho_hat)
}

fn source_half(
    cur: &PicardFrame,
    prev: &PicardFrame,
    base: &ConstantState,
    params: &ModelParams,
    h: f64,
) -> Result<PicardFrame> {
    let rho_hat = coefficient_density(prev, base)?;
    let gp = rho_hat.map(|r| gprime_scalar(r, params.gamma));
    let rs = cur.rho.to_spectral();
    let px = (&gp * &rs.derivative(Axis::X).to_field())
        .to_spectral()
        .dealias()
        .to_field();
    let py = (&gp * &rs.derivative(Axis::Y).to_field())
        .to_spectral()
        .dealias()
        .to_field();
    let (v1, v2, c) = relax(&cur.v1, &cur.v2, &cur.c, &cur.rho, &px, &py, params, h);
    Ok(PicardFrame {
        rho: cur.rho.clone(),
        v1,
        v2,
        c,
    })
}

fn transport_rhs(
    cur: &PicardFrame,
    prev: &PicardFrame,
    base: &ConstantState,
) -> Result<[Field2D; 3]> {
    let rho_hat = coefficient_density(prev, base)?;
    let grad = |f: &Field2D| {
        let s = f.to_spectral();
        (
            s.derivative(Axis::X).to_field(),
            s.derivative(Axis::Y).to_field(),
        )
    };
    let adv = |f: &Field2D| {
        let (fx, fy) = grad(f);
        let a = &(&prev.v1 * &fx) + &(&prev.v2 * &fy);
        -&a.to_spectral().dealias().to_field()
    };
    let (v1x, _) = grad(&cur.v1);
    let (_, v2y) = grad(&cur.v2);
    let div = &v1x + &v2y;
    let mut drho = adv(&cur.rho);
    drho.axpy(-1.0, &(&rho_hat * &div).to_spectral().dealias().to_field());
    Ok([drho, adv(&cur.v1), adv(&cur.v2)])
}

/// One step of the linear system with coefficients frozen at the previous
/// iterate, sampled at the start (`prev_start`) and end (`prev_end`) of the
/// step. Strang splitting: exact source half steps around a Heun step of
/// the transport, whose two stages sit exactly on the sample times.
pub fn linear_step(
    prev_start: &PicardFrame,
    prev_end: &PicardFrame,
    current: &PicardFrame,
    base: &ConstantState,
    params: &ModelParams,
    dt: f64,
) -> Result<PicardFrame> {
    check_params(params)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be > 0"));
    }
    let half = 0.5 * dt;
    let s = source_half(current, prev_start, base, params, half)?;
    let k1 = transport_rhs(&s, prev_start, base)?;
    let mid = PicardFrame {
        rho: Field2D::lincomb(1.0, &s.rho, dt, &k1[0]),
        v1: Field2D::lincomb(1.0, &s.v1, dt, &k1[1]),
        v2: Field2D::lincomb(1.0, &s.v2, dt, &k1[2]),
        c: s.c.clone(),
    };
    let k2 = transport_rhs(&mid, prev_end, base)?;
    let heun = |u: &Field2D, m: &Field2D, k: &Field2D| {
        let mut out = Field2D::lincomb(0.5, u, 0.5, m);
        out.axpy(0.5 * dt, k);
        out
    };
    let t = PicardFrame {
        rho: heun(&s.rho, &mid.rho, &k2[0]),
        v1: heun(&s.v1, &mid.v1, &k2[1]),
        v2: heun(&s.v2, &mid.v2, &k2[2]),
        c: s.c,
    };
    let out = source_half(&t, prev_end, base, params, half)?;
    out.ensure_finite()?;
    Ok(out)
}

/// `½ ∫ [g'(ρ̂)/ε² ρ̄² + ρ̂|v̄|² + λ c̄²]`.
pub fn weighted_energy(
    dev: &PicardFrame,
    rho_hat: &Field2D,
    params: &ModelParams,
    lambda: f64,
) -> Result<f64> {
    let min = rho_hat.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let inv_e2 = 1.0 / (params.epsilon * params.epsilon);
    let mut acc = 0.0;
    for i in 0..rho_hat.data().len() {
        let r = rho_hat.data()[i];
        let (p, u, w, c) = (
            dev.rho.data()[i],
            dev.v1.data()[i],
            dev.v2.data()[i],
            dev.c.data()[i],
        );
        acc +=
            gprime_scalar(r, params.gamma) * inv_e2 * p * p + r * (u * u + w * w) + lambda * c * c;
    }
    Ok(0.5 * acc / rho_hat.data().len() as f64)
}

/// `∫ [ρ̄²/ε² + |v̄|² + c̄²/ε]`, the quantity the weighted energy controls.
pub fn coercivity_norm(dev: &PicardFrame, epsilon: f64) -> f64 {
    dev.rho.dot(&dev.rho) / (epsilon * epsilon)
        + dev.v1.dot(&dev.v1)
        + dev.v2.dot(&dev.v2)
        + dev.c.dot(&dev.c) / epsilon
}

/// `min(min g' on [ρ̃−K, ρ̃+K], ρ̃−K, λε) / 2`.
pub fn coercivity_constant(
    rho_tilde: f64,
    k_radius: f64,
    gamma: f64,
    lambda: f64,
    epsilon: f64,
) -> f64 {
    let lo = rho_tilde - k_radius;
    let hi = rho_tilde + k_radius;
    let gmin = gprime_scalar(lo, gamma).min(gprime_scalar(hi, gamma));
    0.5 * gmin.min(lo).min(lambda * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    /// `sup_t` of the weighted Hˢ norm of the deviation.
    pub sup_norm_weighted: f64,
    /// `sup_t` of the weighted Hˢ norm of the difference to the previous
    /// iterate.
    pub diff_norm: f64,
    pub min_rho: f64,
    /// Envelope `𝓔(t) ≤ A 𝓔(0) e^{Bt}` fitted along the iterate; `None`
    /// when the energy vanishes.
    pub gronwall: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub base: ConstantState,
    pub dt: f64,
    pub times: Vec<f64>,
    pub frames: Vec<PicardFrame>,
    pub records: Vec<IterateRecord>,
    pub converged: bool,
    pub lambda: f64,
    pub coercivity: f64,
}

impl PicardOutcome {
    /// `iter,sup_norm_weighted,diff_norm,min_rho`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,sup_norm_weighted,diff_norm,min_rho")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e}",
                r.iter, r.sup_norm_weighted, r.diff_norm, r.min_rho
            )?;
        }
        Ok(())
    }

    pub fn max_iterate_norm(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.sup_norm_weighted)
            .fold(0.0, f64::max)
    }

    pub fn min_density(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.min_rho)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `ρ = ρ̃ + A cos 2πx`, `v = 0`, `c = c̃ +` its Helmholtz response, with `A`
/// chosen so the weighted Hˢ norm of the deviation equals `delta`.
pub fn single_mode_data(
    config: &PicardConfig,
    params: &ModelParams,
    n: usize,
) -> Result<PicardFrame> {
    let shape = Field2D::from_fn(n, |x, _| (TWO_PI * x).cos());
    let chem = crate::field::solve_helmholtz(&shape, params.alpha, params.beta)?;
    let unit = PicardFrame {
        rho: shape,
        v1: Field2D::zeros(n),
        v2: Field2D::zeros(n),
        c: chem,
    };
    let norm = unit.weighted_norm(params.epsilon, config.s_norm);
    let a = config.delta / norm;
    Ok(PicardFrame {
        rho: &unit.rho * a,
        v1: unit.v1,
        v2: unit.v2,
        c: &unit.c * a,
    })
}

fn time_grid(config: &PicardConfig, params: &ModelParams, n: usize) -> (usize, f64) {
    let sound =
        (config.rho_tilde * gprime_scalar(config.rho_tilde, params.gamma)).sqrt() / params.epsilon;
    let dt_cfl = config.cfl / (n as f64 * sound);
    let steps = (config.t_final / dt_cfl).ceil().max(1.0) as usize;
    (steps, config.t_final / steps as f64)
}

fn gronwall_fit(times: &[f64], energy: &[f64]) -> Option<(f64, f64)> {
    let e0 = energy[0];
    if !(e0 > 0.0) {
        return None;
    }
    let ys: Vec<f64> = energy.iter().map(|e| (e / e0).ln()).collect();
    let (mut stt, mut sty) = (0.0, 0.0);
    for (t, y) in times.iter().zip(&ys) {
        stt += t * t;
        sty += t * y;
    }
    let b = if stt > 0.0 { (sty / stt).max(0.0) } else { 0.0 };
    let a = times
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - b * t).exp())
        .fold(1.0, f64::max);
    Some((a, b))
}

/// Iterates the linear scheme from the time-constant extension of the
/// initial data until successive iterates agree to `tol` in the weighted
/// sup-in-time norm.
pub fn run_iteration(
    config: &PicardConfig,
    params: &ModelParams,
    initial: &PicardFrame,
) -> Result<PicardOutcome> {
    config.validate()?;
    params.validate()?;
    check_params(params)?;
    let n = initial.rho.n();
    let eps = params.epsilon;
    let s = config.s_norm;
    let init_norm = initial.weighted_norm(eps, s);
    if init_norm > config.delta * (1.0 + 1e-9) + 1e-300 {
        return Err(Error::Precondition(format!(
            "initial deviation norm {init_norm:e} exceeds delta = {:e}",
            config.delta
        )));
    }
    let base = ConstantState::new(params, config.rho_tilde)?;
    let lambda = config.lambda(eps);
    let coercivity =
        coercivity_constant(config.rho_tilde, config.k_radius, params.gamma, lambda, eps);
    let (steps, dt) = time_grid(config, params, n);
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();

    let mut prev: Vec<PicardFrame> = vec![initial.clone(); steps + 1];
    let mut records = Vec::new();
    let mut converged = false;
    for iter in 1..=config.max_iters {
        // The coefficients must stay symmetrizable at every iterate start.
        for frame in [&prev[0], &prev[steps]] {
            let st = frame.to_state(&base, 0.0)?;
            let lc = assemble_linear_coeffs(&st, params)?;
            if lc.symmetry_defect() != (0.0, 0.0) {
                return Err(Error::Precondition("symmetrizer lost symmetry".into()));
            }
        }
        let mut next = Vec::with_capacity(steps + 1);
        next.push(initial.clone());
        for k in 0..steps {
            let (a, b) = (
                prev.get(k).ok_or(Error::MissingSample { index: k })?,
                prev.get(k + 1)
                    .ok_or(Error::MissingSample { index: k + 1 })?,
            );
            let out =
                linear_step(a, b, &next[k], &base, params, dt).map_err(|e| e.at_time(times[k]))?;
            next.push(out);
        }
        let mut sup_norm: f64 = 0.0;
        let mut diff: f64 = 0.0;
        let mut min_rho = f64::INFINITY;
        let mut energy = Vec::with_capacity(steps + 1);
        for (k, f) in next.iter().enumerate() {
            sup_norm = sup_norm.max(f.weighted_norm(eps, s));
            diff = diff.max(f.difference(&prev[k]).weighted_norm(eps, s));
            min_rho = min_rho.min(f.rho.min() + config.rho_tilde);
            let rho_hat = prev[k].rho.map(|r| r + config.rho_tilde);
            energy.push(weighted_energy(f, &rho_hat, params, lambda)?);
        }
        records.push(IterateRecord {
            iter,
            sup_norm_weighted: sup_norm,
            diff_norm: diff,
            min_rho,
            gronwall: gronwall_fit(&times, &energy),
        });
        if !(sup_norm <= config.k_radius) {
            return Err(Error::InductiveBound {
                iter,
                norm: sup_norm,
                bound: config.k_radius,
            });
        }
        prev = next;
        if diff < config.tol {
            converged = true;
            break;
        }
    }
    Ok(PicardOutcome {
        base,
        dt,
        times,
        frames: prev,
        records,
        converged,
        lambda,
        coercivity,
    })
}

/// `sup_t ‖ρ_Picard − ρ_nonlinear‖_{L²}` against the nonlinear solver run on
/// the same time grid from the same data.
pub fn compare_with_nonlinear(outcome: &PicardOutcome, params: &ModelParams) -> Result<f64> {
    let initial = outcome.frames[0].to_state(&outcome.base, 0.0)?;
    let mut densities = Vec::with_capacity(outcome.frames.len());
    let mut collect = |s: &State, _: &ModelParams| {
        densities.push(s.rho.clone());
        Ok(())
    };
    let t_final = *outcome.times.last().expect("time grid");
    hyperbolic::simulate(
        &initial,
        params,
        t_final,
        &SimOptions::fixed(outcome.dt),
        &mut [&mut collect],
    )?;
    if densities.len() != outcome.frames.len() {
        return Err(Error::MissingSample {
            index: densities.len().min(outcome.frames.len()),
        });
    }
    let mut worst: f64 = 0.0;
    for (f, rho) in outcome.frames.iter().zip(&densities) {
        let d = rho.zip_map(&f.rho, |a, b| a - outcome.base.rho_tilde - b);
        worst = worst.max(d.dot(&d).sqrt());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(eps: f64) -> ModelParams {
        ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.0, eps).unwrap()
    }

    #[test]
    fn lambda_default() {
        let c = PicardConfig::default();
        assert!((c.lambda(0.5) - 1.44 / (0.5 * 0.8)).abs() < 1e-14);
        let bad = PicardConfig {
            k_radius: 0.6,
            ..PicardConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let p = params(0.5);
        let base = ConstantState::new(&p, 1.0).unwrap();
        let z = PicardFrame::zeros(16);
        let out = linear_step(&z, &z, &z, &base, &p, 1e-3).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn zero_delta_converges_at_once() {
        let p = params(0.5);
        let cfg = PicardConfig {
            delta: 0.0,
            ..PicardConfig::default()
        };
        let out = run_iteration(&cfg, &p, &PicardFrame::zeros(16)).unwrap();
        assert!(out.converged);
        assert_eq!(out.records.len(), 1);
        assert!(out.frames.iter().all(|f| f.weighted_norm(0.5, 4.0) == 0.0));
    }

    #[test]
    fn rejects_oversized_data() {
        let p = params(0.5);
        let cfg = PicardConfig::default();
        let mut data = single_mode_data(&cfg, &p, 16).unwrap();
        data.rho = &data.rho * 2.0;
        assert!(matches!(
            run_iteration(&cfg, &p, &data),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn weighted_energy_examples() {
        let p = params(1.0);
        let one = Field2D::constant(8, 1.0);
        let z = PicardFrame::zeros(8);
        assert_eq!(weighted_energy(&z, &one, &p, 1.0).unwrap(), 0.0);
        let dev = PicardFrame {
            v1: Field2D::constant(8, 1.0),
            ..PicardFrame::zeros(8)
        };
        assert!((weighted_energy(&dev, &one, &p, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    fn expm(a: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let norm: f64 = a
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scale = 0.5f64.powi(squarings);
        let mul = |x: &[[f64; 4]; 4], y: &[[f64; 4]; 4]| {
            let mut out = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        out[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            out
        };
        let mut b = *a;
        for row in b.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        let mut result = [[0.0; 4]; 4];
        let mut term = [[0.0; 4]; 4];
        for i in 0..4 {
            result[i][i] = 1.0;
            term[i][i] = 1.0;
        }
        for k in 1..30 {
            term = mul(&term, &b);
            for row in term.iter_mut() {
                for v in row.iter_mut() {
                    *v /= k as f64;
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            result = mul(&result, &result);
        }
        result
    }

    /// Mode (1,0): ρ̄ = r cos, v¹ = p sin, v² = w sin, c̄ = q cos.
    #[test]
    fn single_mode_matches_matrix_exponential() {
        let eps = 0.5;
        let p = params(eps);
        let base = ConstantState::new(&p, 1.0).unwrap();
        let n = 16;
        let k = TWO_PI;
        let gp = 1.0;
        let a = [
            [0.0, -k, 0.0, 0.0],
            [
                k * gp / (eps * eps),
                -1.0 / (eps * eps),
                0.0,
                -k / (eps * eps),
            ],
            [0.0, 0.0, -1.0 / (eps * eps), 0.0],
            [p.alpha / eps, 0.0, 0.0, -(k * k + p.beta) / eps],
        ];
        let u0 = [1e-3, 2e-4, 0.0, 5e-4];
        let frame = |u: &[f64; 4]| PicardFrame {
            rho: Field2D::from_fn(n, |x, _| u[0] * (TWO_PI * x).cos()),
            v1: Field2D::from_fn(n, |x, _| u[1] * (TWO_PI * x).sin()),
            v2: Field2D::from_fn(n, |x, _| u[2] * (TWO_PI * x).sin()),
            c: Field2D::from_fn(n, |x, _| u[3] * (TWO_PI * x).cos()),
        };
        let z = PicardFrame::zeros(n);
        let err = |dt: f64| {
            let mut m = a;
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v *= dt;
                }
            }
            let e = expm(&m);
            let mut exact = [0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    exact[i] += e[i][j] * u0[j];
                }
            }
            let got = linear_step(&z, &z, &frame(&u0), &base, &p, dt).unwrap();
            got.difference(&frame(&exact)).weighted_norm(eps, 0.0)
        };
        let dt = 0.0025;
        let ratio = err(dt) / err(dt / 2.0);
        assert!(ratio > 7.5 && ratio < 8.5, "local error ratio {ratio}");
    }

    #[test]
    fn converges_and_stays_in_ball() {
        let p = params(0.5);
        let cfg = PicardConfig::default();
        let data = single_mode_data(&cfg, &p, 16).unwrap();
        assert!((data.weighted_norm(0.5, 4.0) - 1e-3).abs() < 1e-15);
        let out = run_iteration(&cfg, &p, &data).unwrap();
        assert!(out.converged, "{:?}", out.records);
        assert!(out.max_iterate_norm() <= cfg.k_radius);
        assert!(out.min_density() > 0.5);
        let diffs: Vec<f64> = out.records.iter().map(|r| r.diff_norm).collect();
        for w in diffs.windows(2).skip(1) {
            assert!(w[1] < w[0], "{diffs:?}");
        }
        let agreement = compare_with_nonlinear(&out, &p).unwrap();
        assert!(agreement < 1e-6, "{agreement}");
    }

    #[test]
    fn csv_layout() {
        let p = params(0.5);
        let cfg = PicardConfig {
            delta: 0.0,
            ..PicardConfig::default()
        };
        let out = run_iteration(&cfg, &p, &PicardFrame::zeros(8)).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,sup_norm_weighted,diff_norm,min_rho\n1,"));
    }

    fn random_frame(n: usize, a: [f64; 4], ph: f64) -> PicardFrame {
        PicardFrame {
            rho: Field2D::from_fn(n, |x, y| {
                a[0] * (TWO_PI * (x + ph)).cos() * (TWO_PI * y).sin()
            }),
            v1: Field2D::from_fn(n, |x, y| a[1] * (TWO_PI * (2.0 * x + y)).sin()),
            v2: Field2D::from_fn(n, |x, _| a[2] * (TWO_PI * x + ph).cos()),
            c: Field2D::from_fn(n, |_, y| a[3] * (TWO_PI * y).cos()),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linear_step_is_linear(
            a in proptest::array::uniform4(-1e-3f64..1e-3),
            b in proptest::array::uniform4(-1e-3f64..1e-3),
            ph in 0.0f64..1.0, s in -3.0f64..3.0,
        ) {
            let p = params(0.5);
            let base = ConstantState::new(&p, 1.0).unwrap();
            let n = 16;
            let prev = random_frame(n, [0.05, 0.02, -0.03, 0.01], 0.3);
            let (x, y) = (random_frame(n, a, ph), random_frame(n, b, 1.0 - ph));
            let dt = 1e-3;
            let step = |f: &PicardFrame| linear_step(&prev, &prev, f, &base, &p, dt).unwrap();
            let sum = PicardFrame {
                rho: &x.rho + &(&y.rho * s),
                v1: &x.v1 + &(&y.v1 * s),
                v2: &x.v2 + &(&y.v2 * s),
                c: &x.c + &(&y.c * s),
            };
            let (sx, sy, ss) = (step(&x), step(&y), step(&sum));
            let combo = PicardFrame {
                rho: &sx.rho + &(&sy.rho * s),
                v1: &sx.v1 + &(&sy.v1 * s),
                v2: &sx.v2 + &(&sy.v2 * s),
                c: &sx.c + &(&sy.c * s),
            };
            prop_assert!(ss.difference(&combo).weighted_norm(0.5, 0.0) < 1e-15);
        }

        #[test]
        fn energy_is_coercive(
            a in proptest::array::uniform4(-1.0f64..1.0),
            h in -0.19f64..0.19, ph in 0.0f64..1.0,
            gamma in 0.5f64..3.0, eps in 0.1f64..1.0,
        ) {
            let cfg = PicardConfig::default();
            let p = ModelParams::new(ScalingVariant::First, 1.0, 1.0, gamma, eps).unwrap();
            let lambda = cfg.lambda(eps);
            let n = 8;
            let rho_hat = Field2D::from_fn(n, |x, y| 1.0 + h * (TWO_PI * (x + y + ph)).sin());
            let dev = random_frame(n, a, ph);
            let e = weighted_energy(&dev, &rho_hat, &p, lambda).unwrap();
            let c = coercivity_constant(1.0, cfg.k_radius, gamma, lambda, eps);
            prop_assert!(e >= c * coercivity_norm(&dev, eps) * (1.0 - 1e-12));
        }
    }
}
