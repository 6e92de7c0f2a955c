//! Uniform grid on the strip coordinate xi. and its reciprocal frequency grid.
//!
//! Conventions: xi_i = -L + i * dxi for i in 0..N (half open, symmetric about
//! zero), s_k = (k - N/2) * ds with ds = pi / L, so ds * dxi = 2 pi / N.  The
//! continuous transform pair
//!
//!   F[f](s) = (2 pi)^(-1/2) Int f(xi) e^(-i s xi) dxi
//!
//! is approximated by the rectangle rule, which is spectrally accurate for the
//! exponentially decaying pullbacks this crate feeds through it.

use crate::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone)]
pub struct TransformGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    l: f64,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TransformGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformGrid").field("l", &self.inner.l).field("n", &self.inner.n).finish()
    }
}

impl PartialEq for TransformGrid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.l == other.inner.l && self.inner.n == other.inner.n
    }
}

impl TransformGrid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {l}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("point count must be even and >= 8, got {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(TransformGrid {
            inner: Arc::new(GridInner {
                l,
                n,
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            }),
        })
    }

    pub fn half_width(&self) -> f64 {
        self.inner.l
    }

    pub fn len(&self) -> usize {
        self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d_xi(&self) -> f64 {
        2.0 * self.inner.l / self.inner.n as f64
    }

    pub fn d_s(&self) -> f64 {
        PI / self.inner.l
    }

    pub fn xi(&self, i: usize) -> f64 {
        -self.inner.l + i as f64 * self.d_xi()
    }

    pub fn s(&self, k: usize) -> f64 {
        (k as f64 - (self.inner.n / 2) as f64) * self.d_s()
    }

    /// Index of the s = 0 node.
    pub fn zero_index(&self) -> usize {
        self.inner.n / 2
    }

    pub fn xi_values(&self) -> Vec<f64> {
        (0..self.inner.n).map(|i| self.xi(i)).collect()
    }

    pub fn s_values(&self) -> Vec<f64> {
        (0..self.inner.n).map(|k| self.s(k)).collect()
    }

    /// Sign flip (-1)^(N/2) from the grid offsets entering both transforms.
    fn offset_sign(&self) -> f64 {
        if (self.inner.n / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Discrete version of F[f](s_k) from samples on the xi grid.
    pub fn fourier_forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.inner.n);
        let scale = self.d_xi() / (2.0 * PI).sqrt() * self.offset_sign();
        let mut buf: Vec<Complex64> =
            samples.iter().enumerate().map(|(i, v)| if i % 2 == 0 { *v } else { -*v }).collect();
        self.inner.fwd.process(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            *v *= if k % 2 == 0 { scale } else { -scale };
        }
        buf
    }

    /// Discrete inverse transform back to the xi grid.
    pub fn fourier_inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(spectrum.len(), self.inner.n);
        let scale = self.d_s() / (2.0 * PI).sqrt() * self.offset_sign();
        let mut buf: Vec<Complex64> =
            spectrum.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -*v }).collect();
        self.inner.inv.process(&mut buf);
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= if i % 2 == 0 { scale } else { -scale };
        }
        buf
    }

    /// Semi-discrete forward transform at an arbitrary frequency.
    pub fn eval_forward_at(&self, samples: &[Complex64], s: f64) -> Complex64 {
        assert_eq!(samples.len(), self.inner.n);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in samples.iter().enumerate() {
            let ph = -s * self.xi(i);
            acc += v * Complex64::new(ph.cos(), ph.sin());
        }
        acc * self.d_xi() / (2.0 * PI).sqrt()
    }

    /// Semi-discrete inverse transform at an arbitrary position.
    pub fn eval_inverse_at(&self, spectrum: &[Complex64], xi: f64) -> Complex64 {
        assert_eq!(spectrum.len(), self.inner.n);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in spectrum.iter().enumerate() {
            let ph = self.s(k) * xi;
            acc += v * Complex64::new(ph.cos(), ph.sin());
        }
        acc * self.d_s() / (2.0 * PI).sqrt()
    }
}
