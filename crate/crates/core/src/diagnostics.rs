//! Energy functionals, balance residuals and monitored bounds, evaluated as
//! observers along trajectories.

use crate::error::{Error, Result};
use crate::field::TWO_PI;
use crate::field::{lp_norm, solve_poisson_meanzero, wavenumber, Axis, Field2D, SpectralField2D};
use crate::model::{mass, pressure_potential, ModelParams, ScalingVariant, State};
use crate::timeloop::Observer;
use std::f64::consts::PI;
use std::io::Write;

/// Every integrand of the energy estimates at one observation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `∫ (ε²/2) ρ|v|²`.
    pub kinetic: f64,
    /// `∫ P(ρ)`.
    pub potential: f64,
    /// `∫ (ε/2) c²`, or `∫ c²/2` for the third scaling; zero for the
    /// Poisson coupling.
    pub chem_l2: f64,
    /// `∫ ρc / 2`; only nonzero for the Poisson coupling.
    pub chem_coupling: f64,
    /// `∫₀ᵗ ∫ ρ|v|²`.
    pub dissipation_cum: f64,
    /// `∫ |∇c|²`.
    pub gradc_l2: f64,
    /// `∫₀ᵗ ∫ |∇c|²`.
    pub gradc_cum: f64,
    /// `∫₀ᵗ ∫ c²`.
    pub c_l2_cum: f64,
    /// `∫₀ᵗ ∫ ρ v·∇c`.
    pub coupling_cum: f64,
    /// `kinetic + potential`, or `E_ε = kinetic + potential − ∫ρc/2` under
    /// the Poisson coupling.
    pub energy: f64,
    /// `∫ (P(ρ) − ρc)`.
    pub functional_j: f64,
    /// Left side of the first-scaling estimate:
    /// `kinetic + potential + dissipation_cum / 2`.
    pub estimate_lhs: f64,
    /// Discrete residual of the exact balance: for the parabolic couplings
    /// `(K+P)(t) − (K+P)(0) + ∫∫ρ|v|² − ∫∫ρv·∇c`, for the Poisson coupling
    /// `E_ε(t) + ∫∫ρ|v|² − E_ε(0)`.
    pub balance_residual: f64,
    /// Running estimate `sup_s S(s)/s` of the slack constant `K̃` with
    /// `S(t) = chem_l2(t) + (β/2)∫∫c² + ∫∫|∇c|² − chem_l2(0)`.
    pub k_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Integrands {
    t: f64,
    dissipation: f64,
    gradc: f64,
    c2: f64,
    coupling: f64,
}

/// Trapezoid accumulators owned by one trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Accumulators {
    last: Option<Integrands>,
    start: Option<f64>,
    dissipation_cum: f64,
    gradc_cum: f64,
    c_l2_cum: f64,
    coupling_cum: f64,
    initial_energy: Option<f64>,
    initial_chem: Option<f64>,
    k_tilde: f64,
}

impl Accumulators {
    pub fn new() -> Self {
        Self::default()
    }

    fn advance(&mut self, now: Integrands) -> Result<()> {
        if let Some(prev) = self.last {
            let dt = now.t - prev.t;
            if dt < 0.0 {
                return Err(Error::Precondition(format!(
                    "observation times must increase ({} after {})",
                    now.t, prev.t
                )));
            }
            let h = 0.5 * dt;
            self.dissipation_cum += h * (prev.dissipation + now.dissipation);
            self.gradc_cum += h * (prev.gradc + now.gradc);
            self.c_l2_cum += h * (prev.c2 + now.c2);
            self.coupling_cum += h * (prev.coupling + now.coupling);
        }
        self.last = Some(now);
        Ok(())
    }
}

struct Pointwise {
    kinetic: f64,
    potential: f64,
    dissipation: f64,
    gradc: f64,
    c2: f64,
    coupling: f64,
    rho_c: f64,
}

fn pointwise(state: &State, params: &ModelParams) -> Result<Pointwise> {
    let min = state.rho.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let cs = state.c.to_spectral();
    let cx = cs.derivative(Axis::X).to_field();
    let cy = cs.derivative(Axis::Y).to_field();
    let (r, m, n) = (state.rho.data(), state.m.data(), state.n.data());
    let len = r.len() as f64;
    let mut diss = 0.0;
    let mut coupling = 0.0;
    for i in 0..r.len() {
        diss += (m[i] * m[i] + n[i] * n[i]) / r[i];
        coupling += m[i] * cx.data()[i] + n[i] * cy.data()[i];
    }
    let dissipation = diss / len;
    Ok(Pointwise {
        kinetic: 0.5 * params.epsilon * params.epsilon * dissipation,
        potential: pressure_potential(&state.rho, params.gamma)?.mean(),
        dissipation,
        gradc: cx.dot(&cx) + cy.dot(&cy),
        c2: state.c.dot(&state.c),
        coupling: coupling / len,
        rho_c: state.rho.dot(&state.c),
    })
}

fn energy_report_impl(
    state: &State,
    params: &ModelParams,
    acc: &mut Accumulators,
) -> Result<EnergyReport> {
    let pw = pointwise(state, params)?;
    acc.advance(Integrands {
        t: state.t,
        dissipation: pw.dissipation,
        gradc: pw.gradc,
        c2: pw.c2,
        coupling: pw.coupling,
    })?;
    let poisson = params.variant == ScalingVariant::SecondPoisson;
    let chem_l2 = 0.5 * params.chem_time_scale() * pw.c2;
    let chem_coupling = if poisson { 0.5 * pw.rho_c } else { 0.0 };
    let energy = pw.kinetic + pw.potential - chem_coupling;
    let e0 = *acc.initial_energy.get_or_insert(energy);
    let chem0 = *acc.initial_chem.get_or_insert(chem_l2);
    let balance_residual = if poisson {
        energy + acc.dissipation_cum - e0
    } else {
        energy - e0 + acc.dissipation_cum - acc.coupling_cum
    };
    if !poisson {
        let t0 = *acc.start.get_or_insert(state.t);
        let elapsed = state.t - t0;
        if elapsed > 0.0 {
            let slack = chem_l2 + 0.5 * params.beta * acc.c_l2_cum + acc.gradc_cum - chem0;
            acc.k_tilde = acc.k_tilde.max(slack / elapsed);
        }
    }
    Ok(EnergyReport {
        t: state.t,
        kinetic: pw.kinetic,
        potential: pw.potential,
        chem_l2: if poisson { 0.0 } else { chem_l2 },
        chem_coupling,
        dissipation_cum: acc.dissipation_cum,
        gradc_l2: pw.gradc,
        gradc_cum: acc.gradc_cum,
        c_l2_cum: acc.c_l2_cum,
        coupling_cum: acc.coupling_cum,
        energy,
        functional_j: pw.potential - pw.rho_c,
        estimate_lhs: pw.kinetic + pw.potential + 0.5 * acc.dissipation_cum,
        balance_residual,
        k_tilde: acc.k_tilde,
    })
}

/// First (and third) scaling: the hydrodynamic energy `K + P` with its
/// exact balance `d/dt(K+P) + ∫ρ|v|² = ∫ρv·∇c`, plus the slack constant of
/// the chemical estimate.
pub fn energy_first(
    state: &State,
    params: &ModelParams,
    acc: &mut Accumulators,
) -> Result<EnergyReport> {
    if params.variant == ScalingVariant::SecondPoisson {
        return Err(Error::Precondition(
            "energy_first needs a parabolic chemical equation".into(),
        ));
    }
    energy_report_impl(state, params, acc)
}

/// Poisson coupling: `E_ε = K + P − ∫ρc/2` with `E_ε(t) + ∫∫ρ|v|² = E_ε(0)`.
pub fn energy_poisson(
    state: &State,
    params: &ModelParams,
    acc: &mut Accumulators,
) -> Result<EnergyReport> {
    if params.variant != ScalingVariant::SecondPoisson {
        return Err(Error::Precondition(
            "energy_poisson needs the Poisson coupling".into(),
        ));
    }
    energy_report_impl(state, params, acc)
}

/// Dispatches on the scaling variant.
pub fn energy_report(
    state: &State,
    params: &ModelParams,
    acc: &mut Accumulators,
) -> Result<EnergyReport> {
    energy_report_impl(state, params, acc)
}

/// `J[ρ] = ∫ (P(ρ) − ρc)`.
pub fn functional_j(rho: &Field2D, c: &Field2D, gamma: f64) -> Result<f64> {
    rho.same_grid(c)?;
    Ok(pressure_potential(rho, gamma)?.mean() - rho.dot(c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcBound {
    /// `J[ρ]`.
    pub j_value: f64,
    /// `∫ |∇c|²`.
    pub gradc_sq: f64,
    /// `M/(8πκ²) ∫|∇c|²`, so that the bound reads `J ≥ C − gradc_term`.
    pub gradc_term: f64,
    /// `J + gradc_term`: the smallest constant `C` consistent with this
    /// sample. Its minimum along a run calibrates `C`.
    pub calibration: f64,
    /// `1 − M/(4πκ)`.
    pub coefficient: f64,
}

pub fn gradc_bound(rho: &Field2D, c: &Field2D, gamma: f64, kappa: f64) -> Result<GradcBound> {
    let m = mass(rho);
    let critical = m / (4.0 * PI);
    if !(kappa > critical) {
        return Err(Error::Precondition(format!(
            "kappa = {kappa} must exceed M/(4π) = {critical}"
        )));
    }
    let j_value = functional_j(rho, c, gamma)?;
    let (cx, cy) = crate::field::gradient(c);
    let gradc_sq = cx.dot(&cx) + cy.dot(&cy);
    let gradc_term = m / (8.0 * PI * kappa * kappa) * gradc_sq;
    Ok(GradcBound {
        j_value,
        gradc_sq,
        gradc_term,
        calibration: j_value + gradc_term,
        coefficient: 1.0 - m / (4.0 * PI * kappa),
    })
}

/// Resolution of the fine grid used for `∫ exp|h|`.
const TM_MIN_GRID: usize = 512;

/// `log ∫ exp|h| − (1/8π) ∫ |∇h|²` for mean-zero `h`.
///
/// `h` is interpolated spectrally to a fine grid; the integral of the
/// non-smooth `exp|h|` is extrapolated from the fine grid and its every
/// other node sub-grid, cancelling the leading quadrature error.
pub fn trudinger_moser_gap(h: &Field2D) -> Result<f64> {
    let mean = h.mean();
    if !(mean.abs() < 1e-10) {
        return Err(Error::Precondition(format!(
            "trudinger_moser_gap needs a mean-zero field, mean = {mean:e}"
        )));
    }
    h.ensure_finite("h")?;
    let n = h.n();
    let hs = h.to_spectral();
    let nyq = (n / 2) as i64;
    let mut grad = 0.0;
    for (i, c) in hs.coeffs().iter().enumerate() {
        let k1 = wavenumber(i % n, n);
        let k2 = wavenumber(i / n, n);
        let mut w = 0.0;
        if k1 != nyq {
            w += (TWO_PI * k1 as f64).powi(2);
        }
        if k2 != nyq {
            w += (TWO_PI * k2 as f64).powi(2);
        }
        grad += w * c.norm_sqr();
    }
    let fine = upsample(&hs, TM_MIN_GRID.max(2 * n));
    let mf = fine.n();
    let mut sum_f = 0.0;
    let mut sum_c = 0.0;
    for iy in 0..mf {
        for ix in 0..mf {
            let e = fine.get(ix, iy).abs().exp();
            sum_f += e;
            if ix % 2 == 0 && iy % 2 == 0 {
                sum_c += e;
            }
        }
    }
    let t_f = sum_f / (mf * mf) as f64;
    let t_c = sum_c / ((mf / 2) * (mf / 2)) as f64;
    let integral = (4.0 * t_f - t_c) / 3.0;
    Ok(integral.ln() - grad / (8.0 * PI))
}

/// Trigonometric interpolation onto an `m × m` grid; the Nyquist modes of
/// the source are dropped.
fn upsample(s: &SpectralField2D, m: usize) -> Field2D {
    let n = s.n();
    let nyq = (n / 2) as i64;
    let mut out = vec![rustfft::num_complex::Complex64::new(0.0, 0.0); m * m];
    for iy in 0..n {
        let k2 = wavenumber(iy, n);
        if k2 == nyq {
            continue;
        }
        for ix in 0..n {
            let k1 = wavenumber(ix, n);
            if k1 == nyq {
                continue;
            }
            let jx = k1.rem_euclid(m as i64) as usize;
            let jy = k2.rem_euclid(m as i64) as usize;
            out[jy * m + jx] = s.coeffs()[iy * n + ix];
        }
    }
    SpectralField2D::from_coeffs(m, out).to_field()
}

/// Largest gap over a corpus; the calibrated `log C_Ω` for the torus.
pub fn trudinger_moser_corpus_max(corpus: &[Field2D]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for h in corpus {
        best = best.max(trudinger_moser_gap(h)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionRecord {
    pub t: f64,
    pub mass: f64,
    pub min_rho: f64,
    pub linf_rho: f64,
    /// `max |ρv|` over nodes.
    pub linf_momentum: f64,
    /// `‖ε √ρ v‖_{L²}`.
    pub eps_sqrt_rho_v: f64,
    /// `‖√ρ v‖_{L²}`.
    pub sqrt_rho_v: f64,
}

pub fn assumption_monitor(state: &State, params: &ModelParams) -> Result<AssumptionRecord> {
    let min = state.rho.min();
    if !(min > 0.0) {
        return Err(Error::DensityFloor { min, floor: 0.0 });
    }
    let (r, m, n) = (state.rho.data(), state.m.data(), state.n.data());
    let mut diss = 0.0;
    let mut linf_m: f64 = 0.0;
    for i in 0..r.len() {
        diss += (m[i] * m[i] + n[i] * n[i]) / r[i];
        linf_m = linf_m.max(m[i].hypot(n[i]));
    }
    let sqrt_rho_v = (diss / r.len() as f64).sqrt();
    Ok(AssumptionRecord {
        t: state.t,
        mass: mass(&state.rho),
        min_rho: min,
        linf_rho: state.rho.max_abs(),
        linf_momentum: linf_m,
        eps_sqrt_rho_v: params.epsilon * sqrt_rho_v,
        sqrt_rho_v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitErrors {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn compare_to_limit(rho_eps: &Field2D, rho_0: &Field2D) -> Result<LimitErrors> {
    rho_eps.same_grid(rho_0)?;
    let d = rho_eps - rho_0;
    Ok(LimitErrors {
        l1: lp_norm(&d, 1.0),
        l2: lp_norm(&d, 2.0),
        linf: lp_norm(&d, f64::INFINITY),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    /// `Err` holds the failure message of a run that did not reach `T`.
    pub errors: std::result::Result<LimitErrors, String>,
    /// Observed L² order against the previous row.
    pub order_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Builds the table and the adjacent-pair orders
    /// `log(e_i/e_{i+1}) / log(ε_i/ε_{i+1})`.
    pub fn new(entries: Vec<(f64, std::result::Result<LimitErrors, String>)>) -> Result<Self> {
        for w in entries.windows(2) {
            if !(w[1].0 < w[0].0) {
                return Err(Error::Config {
                    field: "run.epsilon".into(),
                    reason: format!(
                        "epsilon list must be strictly decreasing ({} then {})",
                        w[0].0, w[1].0
                    ),
                });
            }
        }
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(entries.len());
        for (epsilon, errors) in entries {
            let order_l2 = match (rows.last(), &errors) {
                (Some(prev), Ok(cur)) => match &prev.errors {
                    Ok(pe) => Some((pe.l2 / cur.l2).ln() / (prev.epsilon / epsilon).ln()),
                    Err(_) => None,
                },
                _ => None,
            };
            rows.push(ConvergenceRow {
                epsilon,
                errors,
                order_l2,
            });
        }
        Ok(ConvergenceTable { rows })
    }

    pub fn l2_errors(&self) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| r.errors.as_ref().ok().map(|e| e.l2))
            .collect()
    }

    /// `epsilon,err_l1,err_l2,err_linf,order_l2`; failed runs print `NaN`
    /// errors, the first row and rows after a failure leave the order empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epsilon,err_l1,err_l2,err_linf,order_l2")?;
        for r in &self.rows {
            let order = r.order_l2.map(|o| format!("{o:.16e}")).unwrap_or_default();
            match &r.errors {
                Ok(e) => writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    r.epsilon, e.l1, e.l2, e.linf, order
                )?,
                Err(_) => writeln!(w, "{:.16e},NaN,NaN,NaN,", r.epsilon)?,
            }
        }
        Ok(())
    }
}

/// One line of the timeseries CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeseriesRow {
    pub t: f64,
    pub mass: f64,
    pub min_rho: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub functional_j: f64,
    pub dissipation_cum: f64,
    pub gradc_l2: f64,
    pub gradc_cum: f64,
    pub c_l2_cum: f64,
    pub linf_rho: f64,
    pub linf_m: f64,
}

pub const TIMESERIES_HEADER: &str =
    "t,mass,min_rho,kinetic,potential,E,J,dissipation_cum,gradc_l2,gradc_cum,c_l2_cum,linf_rho,linf_m";

/// Observer recording energies, assumption quantities and the timeseries.
#[derive(Debug, Clone, Default)]
pub struct EnergyMonitor {
    acc: Accumulators,
    pub reports: Vec<EnergyReport>,
    pub assumptions: Vec<AssumptionRecord>,
}

impl EnergyMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> Vec<TimeseriesRow> {
        self.reports
            .iter()
            .zip(&self.assumptions)
            .map(|(e, a)| TimeseriesRow {
                t: e.t,
                mass: a.mass,
                min_rho: a.min_rho,
                kinetic: e.kinetic,
                potential: e.potential,
                energy: e.energy,
                functional_j: e.functional_j,
                dissipation_cum: e.dissipation_cum,
                gradc_l2: e.gradc_l2,
                gradc_cum: e.gradc_cum,
                c_l2_cum: e.c_l2_cum,
                linf_rho: a.linf_rho,
                linf_m: a.linf_momentum,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TIMESERIES_HEADER}")?;
        for r in self.rows() {
            let vals = [
                r.t,
                r.mass,
                r.min_rho,
                r.kinetic,
                r.potential,
                r.energy,
                r.functional_j,
                r.dissipation_cum,
                r.gradc_l2,
                r.gradc_cum,
                r.c_l2_cum,
                r.linf_rho,
                r.linf_m,
            ];
            let line: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// `sup_t ‖∇c‖_{L²}` over the recorded reports.
    pub fn sup_gradc(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.gradc_l2.sqrt())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.balance_residual.abs())
            .fold(0.0, f64::max)
    }
}

impl Observer for EnergyMonitor {
    fn observe(&mut self, state: &State, params: &ModelParams) -> Result<()> {
        let report = energy_report(state, params, &mut self.acc)?;
        let record = assumption_monitor(state, params)?;
        self.reports.push(report);
        self.assumptions.push(record);
        Ok(())
    }
}

/// The Poisson-coupled chemical field of `ρ` with `α = 1`, used when
/// checking the decomposition `E_ε = K + J + ‖∇c‖²/2`.
pub fn poisson_chemical(rho: &Field2D) -> Field2D {
    solve_poisson_meanzero(rho, 1.0)
}
