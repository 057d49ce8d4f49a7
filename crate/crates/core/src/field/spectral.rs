use super::{Axis, Field2D, TWO_PI};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Row transforms followed by column transforms, unnormalized.
fn fft2(buf: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    fft.process(buf);
    transpose_square(buf, n);
    fft.process(buf);
    transpose_square(buf, n);
}

/// Signed wavenumber of FFT index `i` on an `n`-point grid. The Nyquist index
/// `n/2` maps to `+n/2`.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Discrete Fourier coefficients of a real field, indexed like the samples:
/// `coeffs[iy * N + ix]` holds the mode `(wavenumber(ix), wavenumber(iy))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField2D {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField2D {
    pub fn forward(f: &Field2D) -> Self {
        let n = f.n();
        let mut coeffs: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut coeffs, n, plans(n).forward.as_ref());
        let scale = 1.0 / (n * n) as f64;
        for c in coeffs.iter_mut() {
            *c *= scale;
        }
        SpectralField2D { n, coeffs }
    }

    pub(crate) fn from_coeffs(n: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), n * n, "coefficient count");
        SpectralField2D { n, coeffs }
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn zeros(n: usize) -> Self {
        SpectralField2D {
            n,
            coeffs: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    /// Real part of the inverse transform.
    pub fn to_field(&self) -> Field2D {
        let n = self.n;
        let mut buf = self.coeffs.clone();
        fft2(&mut buf, n, plans(n).inverse.as_ref());
        Field2D::from_vec(n, buf.into_iter().map(|c| c.re).collect()).expect("grid size")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of the mode `(k1, k2)`; negative wavenumbers wrap.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.n as i64;
        let ix = k1.rem_euclid(n) as usize;
        let iy = k2.rem_euclid(n) as usize;
        self.coeffs[iy * self.n + ix]
    }

    /// Multiplies every coefficient by `m(k1, k2)`.
    pub fn apply(&self, m: impl Fn(i64, i64) -> Complex64) -> SpectralField2D {
        let n = self.n;
        let mut out = self.coeffs.clone();
        for iy in 0..n {
            let k2 = wavenumber(iy, n);
            for ix in 0..n {
                let k1 = wavenumber(ix, n);
                out[iy * n + ix] *= m(k1, k2);
            }
        }
        SpectralField2D { n, coeffs: out }
    }

    /// Same as [`apply`](Self::apply) with a real multiplier.
    pub fn apply_real(&self, m: impl Fn(i64, i64) -> f64) -> SpectralField2D {
        self.apply(|k1, k2| Complex64::new(m(k1, k2), 0.0))
    }

    /// Multiplication by `2 pi i k` along `axis`. The Nyquist mode is dropped
    /// so the result stays real; the zero mode is multiplied by exactly zero.
    pub fn derivative(&self, axis: Axis) -> SpectralField2D {
        let nyq = (self.n / 2) as i64;
        self.apply(|k1, k2| {
            let k = match axis {
                Axis::X => k1,
                Axis::Y => k2,
            };
            if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, TWO_PI * k as f64)
            }
        })
    }

    pub fn laplacian(&self) -> SpectralField2D {
        self.apply_real(|k1, k2| -(TWO_PI * TWO_PI) * (k1 * k1 + k2 * k2) as f64)
    }

    /// 2/3-rule truncation: zeroes modes with `max(|k1|, |k2|) > N/3`.
    pub fn dealias(&self) -> SpectralField2D {
        let cut = (self.n / 3) as i64;
        let mut out = self.clone();
        out.dealias_in_place_with(cut);
        out
    }

    pub(crate) fn dealias_in_place_with(&mut self, cut: i64) {
        let n = self.n;
        for iy in 0..n {
            let k2 = wavenumber(iy, n).abs();
            for ix in 0..n {
                let k1 = wavenumber(ix, n).abs();
                if k1.max(k2) > cut {
                    self.coeffs[iy * n + ix] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    pub fn add(&self, other: &SpectralField2D) -> SpectralField2D {
        assert_eq!(self.n, other.n, "grid mismatch");
        SpectralField2D {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> SpectralField2D {
        SpectralField2D {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `sum |f_k|^2`, the squared L2 norm under unit measure.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest violation of conjugate symmetry `f_{-k} = conj(f_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n as i64;
        let mut worst: f64 = 0.0;
        for k2 in 0..n {
            for k1 in 0..n {
                let a = self.coeff(k1, k2);
                let b = self.coeff(-k1, -k2).conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }
}
