//! Discrete calculus on the unit periodic torus.
//!
//! A [`Field2D`] holds `N x N` samples at the nodes `(i/N, j/N)`, stored
//! row-major with `y` as the row index: `data[iy * N + ix]`. The torus has
//! unit area, so integrals are plain grid means.
//!
//! Spectral coefficients are normalized so that the `k = 0` coefficient is the
//! mean of the field and Parseval reads `mean(f^2) = sum |f_k|^2`.

mod ops;
mod snapshot;
mod spectral;

pub use ops::{
    dealias, derivative, gradient, laplacian, lp_norm, sobolev_norm, solve_helmholtz,
    solve_poisson_meanzero,
};
pub use snapshot::{read_snapshot, write_snapshot};
pub use spectral::{wavenumber, SpectralField2D};

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

pub const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    n: usize,
    data: Vec<f64>,
}

pub(crate) fn check_grid(n: usize) -> Result<()> {
    if n >= 4 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(n))
    }
}

impl Field2D {
    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        check_grid(n).expect("grid size");
        Field2D {
            n,
            data: vec![value; n * n],
        }
    }

    /// Samples `f(x, y)` at the grid nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        check_grid(n).expect("grid size");
        let h = 1.0 / n as f64;
        let mut data = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                data.push(f(ix as f64 * h, iy as f64 * h));
            }
        }
        Field2D { n, data }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        check_grid(n)?;
        if data.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Field2D { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.n + ix]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Field2D {
        self.assert_same_grid(other);
        Field2D {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self + a * x`, in place.
    pub fn axpy(&mut self, a: f64, x: &Field2D) {
        self.assert_same_grid(x);
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// `a * x + b * y`.
    pub fn lincomb(a: f64, x: &Field2D, b: f64, y: &Field2D) -> Field2D {
        x.zip_map(y, |u, v| a * u + b * v)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Grid quadrature of the field over the unit torus.
    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Integral of the pointwise product over the torus.
    pub fn dot(&self, other: &Field2D) -> f64 {
        self.assert_same_grid(other);
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum();
        s / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { what })
        }
    }

    pub fn same_grid(&self, other: &Field2D) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    #[inline]
    fn assert_same_grid(&self, other: &Field2D) {
        assert_eq!(self.n, other.n, "grid mismatch");
    }

    pub fn to_spectral(&self) -> SpectralField2D {
        SpectralField2D::forward(self)
    }
}

impl Add for &Field2D {
    type Output = Field2D;
    fn add(self, rhs: &Field2D) -> Field2D {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field2D {
    type Output = Field2D;
    fn sub(self, rhs: &Field2D) -> Field2D {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &Field2D {
    type Output = Field2D;
    fn mul(self, rhs: &Field2D) -> Field2D {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &Field2D {
    type Output = Field2D;
    fn mul(self, rhs: f64) -> Field2D {
        self.map(|a| a * rhs)
    }
}

impl Neg for &Field2D {
    type Output = Field2D;
    fn neg(self) -> Field2D {
        self.map(|a| -a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Field2D::from_vec(6, vec![0.0; 36]).is_err());
        assert!(Field2D::from_vec(2, vec![0.0; 4]).is_err());
        assert!(matches!(
            Field2D::from_vec(8, vec![0.0; 10]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn node_layout_is_row_major_in_y() {
        let f = Field2D::from_fn(8, |x, y| x + 10.0 * y);
        assert_eq!(f.get(3, 0), 3.0 / 8.0);
        assert_eq!(f.data()[8 * 2 + 1], 1.0 / 8.0 + 10.0 * 2.0 / 8.0);
    }

    #[test]
    fn mean_is_zeroth_coefficient() {
        let f = Field2D::from_fn(16, |x, y| {
            1.5 + (TWO_PI * x).sin() * (TWO_PI * 2.0 * y).cos()
        });
        let s = f.to_spectral();
        assert!((s.coeff(0, 0).re - f.mean()).abs() < 1e-15);
    }
}
