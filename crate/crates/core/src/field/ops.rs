use super::{Axis, Field2D, SpectralField2D, TWO_PI};
use crate::error::{Error, Result};

/// Pseudospectral derivative along `axis`.
pub fn derivative(f: &Field2D, axis: Axis) -> Field2D {
    f.to_spectral().derivative(axis).to_field()
}

/// Both partial derivatives from a single forward transform.
pub fn gradient(f: &Field2D) -> (Field2D, Field2D) {
    let s = f.to_spectral();
    (
        s.derivative(Axis::X).to_field(),
        s.derivative(Axis::Y).to_field(),
    )
}

pub fn laplacian(f: &Field2D) -> Field2D {
    f.to_spectral().laplacian().to_field()
}

pub fn dealias(f: &SpectralField2D) -> SpectralField2D {
    f.dealias()
}

#[inline]
pub(crate) fn k_squared(k1: i64, k2: i64) -> f64 {
    TWO_PI * TWO_PI * (k1 * k1 + k2 * k2) as f64
}

/// Solves `Δc + α ρ − β c = 0` exactly mode by mode.
pub fn solve_helmholtz(rho: &Field2D, alpha: f64, beta: f64) -> Result<Field2D> {
    if !(beta > 0.0) {
        return Err(Error::param(
            "beta",
            format!("must be > 0 for the Helmholtz solve, got {beta}"),
        ));
    }
    Ok(helmholtz_spectral(&rho.to_spectral(), alpha, beta).to_field())
}

pub(crate) fn helmholtz_spectral(rho: &SpectralField2D, alpha: f64, beta: f64) -> SpectralField2D {
    rho.apply_real(|k1, k2| alpha / (beta + k_squared(k1, k2)))
}

/// Solves `Δc = −α (ρ − mean ρ)` with the gauge `mean c = 0`.
pub fn solve_poisson_meanzero(rho: &Field2D, alpha: f64) -> Field2D {
    poisson_spectral(&rho.to_spectral(), alpha).to_field()
}

pub(crate) fn poisson_spectral(rho: &SpectralField2D, alpha: f64) -> SpectralField2D {
    rho.apply_real(|k1, k2| {
        if k1 == 0 && k2 == 0 {
            0.0
        } else {
            alpha / k_squared(k1, k2)
        }
    })
}

/// Spectral `H^s` norm, `(sum (1 + 4π²|k|²)^s |f_k|²)^{1/2}`.
pub fn sobolev_norm(f: &Field2D, s: f64) -> f64 {
    assert!(s >= 0.0, "Sobolev index must be nonnegative");
    sobolev_norm_spectral(&f.to_spectral(), s)
}

pub(crate) fn sobolev_norm_spectral(f: &SpectralField2D, s: f64) -> f64 {
    let n = f.n();
    let mut acc = 0.0;
    for (i, c) in f.coeffs().iter().enumerate() {
        let k1 = super::wavenumber(i % n, n);
        let k2 = super::wavenumber(i / n, n);
        acc += (1.0 + k_squared(k1, k2)).powf(s) * c.norm_sqr();
    }
    acc.sqrt()
}

/// Grid-quadrature `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &Field2D, p: f64) -> f64 {
    assert!(p >= 1.0, "L^p norm needs p >= 1");
    if p.is_infinite() {
        return f.max_abs();
    }
    if p == 1.0 {
        return f.data().iter().map(|v| v.abs()).sum::<f64>() / f.data().len() as f64;
    }
    if p == 2.0 {
        return f.dot(f).sqrt();
    }
    let s: f64 = f.data().iter().map(|v| v.abs().powf(p)).sum();
    (s / f.data().len() as f64).powf(1.0 / p)
}
