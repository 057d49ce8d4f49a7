//! Initial data `(ρ₀, v₀ = 0, c₀)` and its ε-uniform size functionals.

use super::config::{IcKind, RunConfig};
use crate::error::{Error, Result};
use crate::field::{Field2D, TWO_PI};
use crate::limit::slaved_chemical;
use crate::model::{stationary_state, ModelParams, ScalingVariant, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest wavenumber in a random smooth pattern.
const RANDOM_KMAX: i64 = 4;

/// Mean-zero pattern with `max |pattern| = 1` (zero for `constant`).
pub fn pattern(kind: IcKind, n: usize, seed: Option<u64>) -> Result<Field2D> {
    match kind {
        IcKind::Constant => Ok(Field2D::zeros(n)),
        IcKind::SingleMode => Ok(Field2D::from_fn(n, |x, _| (TWO_PI * x).cos())),
        IcKind::TwoMode => Ok(Field2D::from_fn(n, |x, y| {
            (TWO_PI * x).cos() * (TWO_PI * y).cos()
        })),
        IcKind::RandomSmooth => {
            let seed = seed.ok_or_else(|| Error::Config {
                field: "ic.seed".into(),
                reason: "required for random_smooth".into(),
            })?;
            random_smooth(n, seed)
        }
    }
}

/// Random trigonometric polynomial with `|k| ≤ 4`, normalised to mean zero
/// and unit sup norm. The coefficient stream does not depend on `n`; modes
/// the grid cannot carry without aliasing are dropped.
pub fn random_smooth(n: usize, seed: u64) -> Result<Field2D> {
    crate::field::check_grid(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = RANDOM_KMAX.min((n / 3) as i64);
    let mut modes = Vec::new();
    for k1 in 0..=RANDOM_KMAX {
        for k2 in -RANDOM_KMAX..=RANDOM_KMAX {
            if (k1 == 0 && k2 <= 0) || k1 * k1 + k2 * k2 > RANDOM_KMAX * RANDOM_KMAX {
                continue;
            }
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            if k1 <= kmax && k2.abs() <= kmax {
                modes.push((k1 as f64, k2 as f64, a, b));
            }
        }
    }
    let mut f = Field2D::from_fn(n, |x, y| {
        modes
            .iter()
            .map(|&(k1, k2, a, b)| {
                let ph = TWO_PI * (k1 * x + k2 * y);
                a * ph.cos() + b * ph.sin()
            })
            .sum()
    });
    let mean = f.mean();
    f = f.map(|v| v - mean);
    let scale = f.max_abs();
    if !(scale > 0.0) {
        return Err(Error::Precondition(format!(
            "grid N = {n} carries no random modes"
        )));
    }
    Ok(f.map(|v| v / scale))
}

/// The initial-data size functionals, all with `v₀ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialReport {
    /// `∫[ε²/2 ρ₀|v₀|² + ρ₀^{γ+1} + ε|c₀|²]`.
    pub i1: f64,
    /// `∫[ε²/2 ρ₀|v₀|² + ρ₀^{γ+1} − ½ρ₀c₀]`.
    pub i2: f64,
    /// `∫[ε²/2 ρ₀|v₀|² + ρ₀^{γ+1} + |c₀|²]`.
    pub i3: f64,
}

impl InitialReport {
    /// The functional relevant to the variant's scaling.
    pub fn for_variant(&self, variant: ScalingVariant) -> f64 {
        match variant {
            ScalingVariant::First => self.i1,
            ScalingVariant::SecondPoisson => self.i2,
            ScalingVariant::ThirdParabolic => self.i3,
        }
    }
}

pub fn initial_report(state: &State, params: &ModelParams) -> Result<InitialReport> {
    let (v1, v2) = state.velocity();
    let eps = params.epsilon;
    let g1 = params.gamma + 1.0;
    let kinetic = 0.5
        * eps
        * eps
        * state
            .rho
            .zip_map(&(&(&v1 * &v1) + &(&v2 * &v2)), |r, s| r * s)
            .mean();
    let pressure = state.rho.map(|r| r.powf(g1)).mean();
    let c2 = state.c.dot(&state.c);
    let coupling = 0.5 * state.rho.dot(&state.c);
    let report = InitialReport {
        i1: kinetic + pressure + eps * c2,
        i2: kinetic + pressure - coupling,
        i3: kinetic + pressure + c2,
    };
    for v in [report.i1, report.i2, report.i3] {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "initial-data functional",
            });
        }
    }
    Ok(report)
}

/// `ρ₀ = rho_base + amplitude·pattern`, `v₀ = 0`, and `c₀` from the
/// variant's elliptic problem, so the data do not depend on ε.
pub fn make_initial_data(cfg: &RunConfig, epsilon: f64) -> Result<(State, InitialReport)> {
    let params = cfg.params(epsilon)?;
    let state = if cfg.ic.kind == IcKind::Constant {
        stationary_state(&params, cfg.ic.rho_base, cfg.n)?
    } else {
        let p = pattern(cfg.ic.kind, cfg.n, cfg.ic.seed)?;
        let rho = p.map(|v| cfg.ic.rho_base + cfg.ic.amplitude * v);
        let c = slaved_chemical(&rho, &params)?;
        State::new(rho, Field2D::zeros(cfg.n), Field2D::zeros(cfg.n), c, 0.0)?
    };
    let report = initial_report(&state, &params)?;
    Ok((state, report))
}
