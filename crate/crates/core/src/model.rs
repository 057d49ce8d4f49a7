//! Parameters, state layout and right-hand-side pieces shared by both solvers.

use crate::error::{Error, Result};
use crate::field::{Axis, Field2D, SpectralField2D};
use std::fmt;
use std::str::FromStr;

/// Which diffusive rescaling of the persistence model is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalingVariant {
    /// `ε c_t = Δc + αρ − βc`; limit has a Helmholtz coupling.
    First,
    /// `0 = Δc + αρ` with `β = σ = 0`; limit is nonlinear-diffusion Keller–Segel.
    SecondPoisson,
    /// `c_t = Δc + αρ − βc` with the rescaled reaction rates.
    ThirdParabolic,
}

impl ScalingVariant {
    pub const ALL: [ScalingVariant; 3] = [
        ScalingVariant::First,
        ScalingVariant::SecondPoisson,
        ScalingVariant::ThirdParabolic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalingVariant::First => "first",
            ScalingVariant::SecondPoisson => "second_poisson",
            ScalingVariant::ThirdParabolic => "third_parabolic",
        }
    }
}

impl fmt::Display for ScalingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalingVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first" | "1" => Ok(ScalingVariant::First),
            "second_poisson" | "second" | "poisson" | "2" => Ok(ScalingVariant::SecondPoisson),
            "third_parabolic" | "third" | "parabolic" | "3" => Ok(ScalingVariant::ThirdParabolic),
            other => Err(Error::Config {
                field: "variant".into(),
                reason: format!(
                    "unknown scaling variant {other:?} (expected first, second_poisson or third_parabolic)"
                ),
            }),
        }
    }
}

pub const DEFAULT_RHO_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub variant: ScalingVariant,
    /// Runs abort when `min ρ` drops below this value.
    pub rho_floor: f64,
}

impl ModelParams {
    /// Validates the constants. `SecondPoisson` forces `β = 0`.
    pub fn new(
        variant: ScalingVariant,
        alpha: f64,
        beta: f64,
        gamma: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let beta = if variant == ScalingVariant::SecondPoisson {
            0.0
        } else {
            beta
        };
        let p = ModelParams {
            alpha,
            beta,
            gamma,
            epsilon,
            variant,
            rho_floor: DEFAULT_RHO_FLOOR,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_floor(mut self, rho_floor: f64) -> Result<Self> {
        self.rho_floor = rho_floor;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::param(
                "alpha",
                format!("must be >= 0, got {}", self.alpha),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(
                "gamma",
                format!("must be > 0, got {}", self.gamma),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::param(
                "epsilon",
                format!("must lie in (0, 1], got {}", self.epsilon),
            ));
        }
        match self.variant {
            ScalingVariant::SecondPoisson => {
                if self.beta != 0.0 {
                    return Err(Error::param("beta", "second_poisson requires beta = 0"));
                }
            }
            _ => {
                if !(self.beta > 0.0 && self.beta.is_finite()) {
                    return Err(Error::param(
                        "beta",
                        format!(
                            "must be > 0 for the {} scaling, got {}",
                            self.variant, self.beta
                        ),
                    ));
                }
            }
        }
        if !(self.rho_floor > 0.0) {
            return Err(Error::param("rho_floor", "must be > 0"));
        }
        Ok(())
    }

    /// Time constant in front of `c_t`, fixed by the variant.
    pub fn sigma(&self) -> f64 {
        match self.variant {
            ScalingVariant::SecondPoisson => 0.0,
            _ => 1.0,
        }
    }

    /// Multiplier of `c_t` in the rescaled chemical equation: `ε` for the
    /// first scaling, 1 for the third, 0 for the elliptic coupling.
    pub fn chem_time_scale(&self) -> f64 {
        match self.variant {
            ScalingVariant::First => self.epsilon,
            ScalingVariant::SecondPoisson => 0.0,
            ScalingVariant::ThirdParabolic => 1.0,
        }
    }
}

/// Unknowns of one system at one time. `m`, `n` are the momentum components
/// `ρ v¹`, `ρ v²`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: Field2D,
    pub m: Field2D,
    pub n: Field2D,
    pub c: Field2D,
    pub t: f64,
}

impl State {
    pub fn new(rho: Field2D, m: Field2D, n: Field2D, c: Field2D, t: f64) -> Result<Self> {
        rho.same_grid(&m)?;
        rho.same_grid(&n)?;
        rho.same_grid(&c)?;
        Ok(State { rho, m, n, c, t })
    }

    pub fn from_velocity(
        rho: Field2D,
        v1: &Field2D,
        v2: &Field2D,
        c: Field2D,
        t: f64,
    ) -> Result<Self> {
        let m = &rho * v1;
        let n = &rho * v2;
        State::new(rho, m, n, c, t)
    }

    pub fn grid(&self) -> usize {
        self.rho.n()
    }

    /// `(m/ρ, n/ρ)`; callers must have checked positivity.
    pub fn velocity(&self) -> (Field2D, Field2D) {
        (
            self.m.zip_map(&self.rho, |m, r| m / r),
            self.n.zip_map(&self.rho, |n, r| n / r),
        )
    }

    pub fn check_floor(&self, floor: f64) -> Result<()> {
        let min = self.rho.min();
        if min.is_nan() {
            return Err(Error::NonFinite { what: "rho" });
        }
        if min < floor {
            return Err(Error::DensityFloor { min, floor });
        }
        Ok(())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        self.rho.ensure_finite("rho")?;
        self.m.ensure_finite("m")?;
        self.n.ensure_finite("n")?;
        self.c.ensure_finite("c")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantState {
    pub rho_tilde: f64,
    pub c_tilde: f64,
}

impl ConstantState {
    pub fn new(params: &ModelParams, rho_tilde: f64) -> Result<Self> {
        if !(rho_tilde > 0.0) {
            return Err(Error::param("rho_tilde", "must be > 0"));
        }
        let c_tilde = match params.variant {
            ScalingVariant::SecondPoisson => 0.0,
            _ => params.alpha * rho_tilde / params.beta,
        };
        Ok(ConstantState { rho_tilde, c_tilde })
    }
}

fn check_nonnegative(rho: &Field2D) -> Result<()> {
    let min = rho.min();
    if min.is_nan() {
        return Err(Error::NonFinite { what: "rho" });
    }
    if min < 0.0 {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    Ok(())
}

/// `g(ρ) = ρ^γ`.
pub fn pressure_g(rho: &Field2D, gamma: f64) -> Result<Field2D> {
    check_nonnegative(rho)?;
    Ok(rho.map(|r| r.powf(gamma)))
}

/// `P(ρ) = ρ^{γ+1} / (γ+1)`, the antiderivative of `g`.
pub fn pressure_potential(rho: &Field2D, gamma: f64) -> Result<Field2D> {
    check_nonnegative(rho)?;
    Ok(rho.map(|r| r.powf(gamma + 1.0) / (gamma + 1.0)))
}

/// `g'(ρ) = γ ρ^{γ−1}`; singular at zero when `γ < 1`.
pub fn pressure_gprime(rho: &Field2D, gamma: f64) -> Result<Field2D> {
    if gamma < 1.0 {
        let min = rho.min();
        if !(min > 0.0) {
            return Err(Error::DensityFloor { min, floor: 0.0 });
        }
    } else {
        check_nonnegative(rho)?;
    }
    Ok(rho.map(|r| gamma * r.powf(gamma - 1.0)))
}

#[inline]
pub(crate) fn gprime_scalar(r: f64, gamma: f64) -> f64 {
    gamma * r.powf(gamma - 1.0)
}

pub fn mass(rho: &Field2D) -> f64 {
    rho.mean()
}

/// The constant equilibrium `ρ ≡ ρ̃`, `v ≡ 0`, `c ≡ (α/β) ρ̃` (zero under the
/// Poisson gauge).
pub fn stationary_state(params: &ModelParams, rho_tilde: f64, grid_n: usize) -> Result<State> {
    let cs = ConstantState::new(params, rho_tilde)?;
    crate::field::Field2D::from_vec(grid_n, vec![0.0; grid_n * grid_n])?;
    State::new(
        Field2D::constant(grid_n, rho_tilde),
        Field2D::zeros(grid_n),
        Field2D::zeros(grid_n),
        Field2D::constant(grid_n, cs.c_tilde),
        0.0,
    )
}

/// Divergence of a flux pair computed spectrally with both components
/// dealiased: `∂x fx + ∂y fy`.
pub(crate) fn dealiased_divergence(fx: &Field2D, fy: &Field2D) -> Field2D {
    let sx = fx.to_spectral().dealias().derivative(Axis::X);
    let sy = fy.to_spectral().dealias().derivative(Axis::Y);
    sx.add(&sy).to_field()
}

pub(crate) fn divergence(fx: &Field2D, fy: &Field2D) -> Field2D {
    let sx = fx.to_spectral().derivative(Axis::X);
    let sy = fy.to_spectral().derivative(Axis::Y);
    sx.add(&sy).to_field()
}

/// Dealiased gradient of a pointwise nonlinearity.
pub(crate) fn dealiased_gradient(f: &Field2D) -> (Field2D, Field2D) {
    let s = f.to_spectral().dealias();
    (
        s.derivative(Axis::X).to_field(),
        s.derivative(Axis::Y).to_field(),
    )
}

/// Conservative divergences of the hyperbolic part. With `weight = ε²` and
/// the pressure included this is the flux of the momentum equations before
/// division by `ε²`.
pub(crate) fn conservative_divergence(
    rho: &Field2D,
    m: &Field2D,
    n: &Field2D,
    weight: f64,
    pressure_gamma: Option<f64>,
) -> Result<(Field2D, Field2D, Field2D)> {
    let drho = -&divergence(m, n);
    let mut fxx = Field2D::zeros(rho.n());
    let mut fxy = Field2D::zeros(rho.n());
    let mut fyy = Field2D::zeros(rho.n());
    {
        let (r, mm, nn) = (rho.data(), m.data(), n.data());
        let (xx, xy, yy) = (fxx.data_mut(), fxy.data_mut(), fyy.data_mut());
        for i in 0..r.len() {
            let inv = weight / r[i];
            xx[i] = mm[i] * mm[i] * inv;
            xy[i] = mm[i] * nn[i] * inv;
            yy[i] = nn[i] * nn[i] * inv;
        }
    }
    if let Some(gamma) = pressure_gamma {
        // γ P(ρ) = γ ρ^{γ+1} / (γ+1)
        let p = pressure_potential(rho, gamma)?;
        fxx.axpy(gamma, &p);
        fyy.axpy(gamma, &p);
    }
    let sxy = fxy.to_spectral().dealias();
    let dm = fxx
        .to_spectral()
        .dealias()
        .derivative(Axis::X)
        .add(&sxy.derivative(Axis::Y));
    let dn = sxy
        .derivative(Axis::X)
        .add(&fyy.to_spectral().dealias().derivative(Axis::Y));
    Ok((drho, -&dm.to_field(), -&dn.to_field()))
}

/// Transport part of the conservative form:
/// `dρ = −(m_x + n_y)`, `dm = −(ε² m²/ρ + γP(ρ))_x − (ε² mn/ρ)_y`, and the
/// symmetric counterpart for `dn`. Sources and the `1/ε²` factor are left to
/// the stepper.
pub fn flux_divergence(state: &State, params: &ModelParams) -> Result<(Field2D, Field2D, Field2D)> {
    let min = state.rho.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let e2 = params.epsilon * params.epsilon;
    conservative_divergence(&state.rho, &state.m, &state.n, e2, Some(params.gamma))
}

/// Per-node coefficient matrices of the linearized, symmetrizable system.
#[derive(Debug, Clone)]
pub struct LinearCoeffs {
    pub a1: Vec<[[f64; 3]; 3]>,
    pub a2: Vec<[[f64; 3]; 3]>,
    /// `B(Û) = (0, ∂x ĉ − v̂¹, ∂y ĉ − v̂²) / ε²`.
    pub b_src: Vec<[f64; 3]>,
    /// Diagonal of the symmetrizer `S = diag(g'(ρ̂)/ε², ρ̂, ρ̂)`.
    pub s: Vec<[f64; 3]>,
}

fn mat_diag_mul(s: &[f64; 3], a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = s[i] * a[i][j];
        }
    }
    out
}

fn asymmetry(m: &[[f64; 3]; 3]) -> f64 {
    (0..3)
        .flat_map(|i| (0..3).map(move |j| (m[i][j] - m[j][i]).abs()))
        .fold(0.0, f64::max)
}

impl LinearCoeffs {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_a1(&self, node: usize) -> [[f64; 3]; 3] {
        mat_diag_mul(&self.s[node], &self.a1[node])
    }

    pub fn s_a2(&self, node: usize) -> [[f64; 3]; 3] {
        mat_diag_mul(&self.s[node], &self.a2[node])
    }

    /// `max over nodes of (‖SA₁ − (SA₁)ᵀ‖_∞, ‖SA₂ − (SA₂)ᵀ‖_∞)`.
    pub fn symmetry_defect(&self) -> (f64, f64) {
        let mut d1: f64 = 0.0;
        let mut d2: f64 = 0.0;
        for i in 0..self.len() {
            d1 = d1.max(asymmetry(&self.s_a1(i)));
            d2 = d2.max(asymmetry(&self.s_a2(i)));
        }
        (d1, d2)
    }

    pub fn min_symmetrizer_entry(&self) -> f64 {
        self.s
            .iter()
            .flat_map(|d| d.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds `A₁(Û)`, `A₂(Û)`, `B(Û)` and `S(Û)` at every node from the
/// previous state `Û`.
pub fn assemble_linear_coeffs(prev: &State, params: &ModelParams) -> Result<LinearCoeffs> {
    let min = prev.rho.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let (v1, v2) = prev.velocity();
    let gp = pressure_gprime(&prev.rho, params.gamma)?;
    let cs: SpectralField2D = prev.c.to_spectral();
    let cx = cs.derivative(Axis::X).to_field();
    let cy = cs.derivative(Axis::Y).to_field();
    let inv_e2 = 1.0 / (params.epsilon * params.epsilon);
    let len = prev.rho.data().len();
    let mut out = LinearCoeffs {
        a1: Vec::with_capacity(len),
        a2: Vec::with_capacity(len),
        b_src: Vec::with_capacity(len),
        s: Vec::with_capacity(len),
    };
    for i in 0..len {
        let r = prev.rho.data()[i];
        let (u, w) = (v1.data()[i], v2.data()[i]);
        let ge = gp.data()[i] * inv_e2;
        out.a1.push([[u, r, 0.0], [ge, u, 0.0], [0.0, 0.0, u]]);
        out.a2.push([[w, 0.0, r], [0.0, w, 0.0], [ge, 0.0, w]]);
        out.b_src.push([
            0.0,
            (cx.data()[i] - u) * inv_e2,
            (cy.data()[i] - w) * inv_e2,
        ]);
        out.s.push([ge, r, r]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TWO_PI;
    use proptest::prelude::*;

    fn params(variant: ScalingVariant) -> ModelParams {
        ModelParams::new(variant, 1.0, 1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "first".parse::<ScalingVariant>().unwrap(),
            ScalingVariant::First
        );
        assert_eq!(
            "second_poisson".parse::<ScalingVariant>().unwrap(),
            ScalingVariant::SecondPoisson
        );
        let err = "fourth".parse::<ScalingVariant>().unwrap_err();
        assert!(err.to_string().contains("variant"));
    }

    #[test]
    fn param_validation() {
        let p = ModelParams::new(ScalingVariant::SecondPoisson, 1.0, 3.0, 1.0, 0.1).unwrap();
        assert_eq!(p.beta, 0.0);
        assert_eq!(p.sigma(), 0.0);
        assert!(ModelParams::new(ScalingVariant::First, 1.0, 0.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(ScalingVariant::First, 1.0, 1.0, 0.0, 0.1).is_err());
        assert!(ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.0, 1.5).is_err());
        assert!(ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.0, 0.0).is_err());
        assert_eq!(params(ScalingVariant::First).sigma(), 1.0);
    }

    fn approx_const(f: &Field2D, v: f64) -> bool {
        f.data()
            .iter()
            .all(|&x| (x - v).abs() < 1e-15 * v.abs().max(1.0))
    }

    #[test]
    fn pressure_examples() {
        let n = 8;
        assert!(approx_const(
            &pressure_g(&Field2D::constant(n, 1.0), 2.7).unwrap(),
            1.0
        ));
        assert!(approx_const(
            &pressure_g(&Field2D::constant(n, 4.0), 0.5).unwrap(),
            2.0
        ));
        assert!(approx_const(
            &pressure_g(&Field2D::constant(n, 3.0), 2.0).unwrap(),
            9.0
        ));

        assert!(approx_const(
            &pressure_potential(&Field2D::constant(n, 2.0), 1.0).unwrap(),
            2.0
        ));
        assert!(approx_const(
            &pressure_potential(&Field2D::zeros(n), 1.0).unwrap(),
            0.0
        ));
        assert!(approx_const(
            &pressure_potential(&Field2D::constant(n, 1.0), 3.0).unwrap(),
            0.25
        ));

        assert!(approx_const(
            &pressure_gprime(&Field2D::constant(n, 1.0), 2.0).unwrap(),
            2.0
        ));
        assert!(approx_const(
            &pressure_gprime(&Field2D::constant(n, 1.0), 1.0).unwrap(),
            1.0
        ));
        assert!(approx_const(
            &pressure_gprime(&Field2D::constant(n, 4.0), 0.5).unwrap(),
            0.25
        ));
    }

    #[test]
    fn negative_density_is_rejected() {
        let mut rho = Field2D::constant(8, 1.0);
        rho.data_mut()[5] = -1e-3;
        assert!(matches!(
            pressure_g(&rho, 1.0),
            Err(Error::DensityFloor { .. })
        ));
        assert!(pressure_gprime(&Field2D::zeros(8), 0.5).is_err());
    }

    #[test]
    fn potential_is_antiderivative_of_pressure() {
        for gamma in [0.5, 1.0, 2.0, 3.3] {
            for r in [0.3, 1.0, 2.5] {
                let h = 1e-4;
                let p = |x: f64| {
                    pressure_potential(&Field2D::constant(4, x), gamma)
                        .unwrap()
                        .get(0, 0)
                };
                let fd = (p(r + h) - p(r - h)) / (2.0 * h);
                let g = pressure_g(&Field2D::constant(4, r), gamma)
                    .unwrap()
                    .get(0, 0);
                assert!((fd - g).abs() < 1e-7 * g.max(1.0), "gamma={gamma} r={r}");
            }
        }
    }

    #[test]
    fn stationary_states() {
        let p = ModelParams::new(ScalingVariant::First, 2.0, 2.0, 1.0, 0.5).unwrap();
        let s = stationary_state(&p, 1.0, 8).unwrap();
        assert!(approx_const(&s.c, 1.0));
        let p = ModelParams::new(ScalingVariant::First, 1.0, 4.0, 1.0, 0.5).unwrap();
        assert!(approx_const(&stationary_state(&p, 2.0, 8).unwrap().c, 0.5));
        let p = params(ScalingVariant::SecondPoisson);
        let s = stationary_state(&p, 3.0, 8).unwrap();
        assert_eq!(s.c.max_abs(), 0.0);
        assert_eq!(s.m.max_abs(), 0.0);
        assert!(approx_const(&s.rho, 3.0));
    }

    #[test]
    fn flux_of_constant_state_vanishes() {
        for gamma in [0.5, 1.0, 2.0] {
            let p = ModelParams::new(ScalingVariant::First, 1.0, 1.0, gamma, 0.3).unwrap();
            let s = stationary_state(&p, 1.3, 16).unwrap();
            let (a, b, c) = flux_divergence(&s, &p).unwrap();
            assert_eq!(a.max_abs() + b.max_abs() + c.max_abs(), 0.0);
        }
    }

    #[test]
    fn flux_mass_component_matches_analytic() {
        let p = ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.0, 1.0).unwrap();
        let n = 32;
        let s = State::new(
            Field2D::constant(n, 1.0),
            Field2D::from_fn(n, |x, _| (TWO_PI * x).sin()),
            Field2D::zeros(n),
            Field2D::zeros(n),
            0.0,
        )
        .unwrap();
        let (drho, _, _) = flux_divergence(&s, &p).unwrap();
        let exact = Field2D::from_fn(n, |x, _| -TWO_PI * (TWO_PI * x).cos());
        assert!((&drho - &exact).max_abs() < 1e-10);
    }

    #[test]
    fn flux_rejects_nonpositive_density() {
        let p = params(ScalingVariant::First);
        let mut s = stationary_state(&p, 1.0, 8).unwrap();
        s.rho.data_mut()[0] = 0.0;
        assert!(flux_divergence(&s, &p).is_err());
    }

    #[test]
    fn linear_coeffs_at_unit_constant() {
        let p = ModelParams::new(ScalingVariant::First, 1.0, 1.0, 1.0, 1.0).unwrap();
        let s = stationary_state(&p, 1.0, 8).unwrap();
        let lc = assemble_linear_coeffs(&s, &p).unwrap();
        assert_eq!(lc.s[3], [1.0, 1.0, 1.0]);
        assert_eq!(
            lc.a1[3],
            [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        );
        assert_eq!(
            lc.a2[3],
            [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
        );
    }

    #[test]
    fn symmetrizer_entry_uses_gprime() {
        let p = ModelParams::new(ScalingVariant::First, 1.0, 1.0, 0.5, 1.0).unwrap();
        let s = stationary_state(&p, 4.0, 8).unwrap();
        let lc = assemble_linear_coeffs(&s, &p).unwrap();
        let gp = pressure_gprime(&s.rho, 0.5).unwrap().get(0, 0);
        assert_eq!(lc.s[0][0], gp);
        assert!((lc.s[0][0] - 0.25).abs() < 1e-15);
    }

    fn smooth(n: usize, a: f64, b: f64, phase: f64) -> Field2D {
        Field2D::from_fn(n, |x, y| {
            a * (TWO_PI * (x + phase)).sin() * (TWO_PI * y).cos()
                + b * (TWO_PI * 2.0 * y + phase).cos()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn flux_divergence_has_zero_mean(
            a in -0.4f64..0.4, b in -0.4f64..0.4, ph in 0.0f64..1.0,
            eps in 0.05f64..1.0, gamma in 0.5f64..3.0,
        ) {
            let n = 16;
            let rho = smooth(n, a, b, ph).map(|v| 1.0 + v);
            let m = smooth(n, b, a, 0.3 * ph);
            let nn = smooth(n, a * b, 0.2, ph * 0.7);
            let s = State::new(rho, m, nn, Field2D::zeros(n), 0.0).unwrap();
            let p = ModelParams::new(ScalingVariant::First, 1.0, 1.0, gamma, eps).unwrap();
            let (d0, d1, d2) = flux_divergence(&s, &p).unwrap();
            prop_assert!(d0.mean().abs() < 1e-13);
            prop_assert!(d1.mean().abs() < 1e-13);
            prop_assert!(d2.mean().abs() < 1e-13);
        }

        #[test]
        fn symmetrized_blocks_are_exactly_symmetric(
            a in -0.8f64..0.8, b in -0.8f64..0.8, ph in 0.0f64..1.0,
            eps in 0.05f64..1.0, gamma in 0.3f64..3.0,
        ) {
            let n = 8;
            let rho = smooth(n, a, b, ph).map(|v| 1.0 + 0.5 * v).map(|v| v.max(0.1));
            let v1 = smooth(n, b, 0.5, ph);
            let v2 = smooth(n, 0.3, a, ph);
            let s = State::from_velocity(rho, &v1, &v2, smooth(n, 0.1, 0.1, 0.0), 0.0).unwrap();
            let p = ModelParams::new(ScalingVariant::First, 1.0, 1.0, gamma, eps).unwrap();
            let lc = assemble_linear_coeffs(&s, &p).unwrap();
            prop_assert_eq!(lc.symmetry_defect(), (0.0, 0.0));
            prop_assert!(lc.min_symmetrizer_entry() > 0.0);
        }
    }
}
