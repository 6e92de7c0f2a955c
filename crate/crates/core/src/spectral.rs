//! Frequency-side calculus on spectral pairs.
//!
//! On the two lines the transmission operator acts by multiplication with
//! eta(s) and -eta(s), the single layer by -p1(s) and -p2(s), and the
//! resolvent divides pointwise.  The weighted inner product
//!
//!   <f, g> = (1/2) Int [ p1 f1 conj(g1) + p2 f2 conj(g2) ] ds
//!
//! matches the energy inner product -<phi, S psi> of the densities; the 1/2
//! absorbs the normalization of the line splitting.
//!
//! The symmetric line needs care at s = 0.  p2 has a double pole there and
//! products with f2 (which vanishes at 0 for mean zero densities) leave a
//! principal value 1/s part plus a finite regular part.  Node values are
//! replaced by the regular part, reconstructed from symmetric five point
//! stencils; the omitted odd part cancels over the symmetric grid.  Outputs
//! of the single layer symbol are therefore fixed only up to an additive
//! constant on the symmetric line, which is invisible to pairings against
//! mean zero densities.

use crate::density::{BoundaryDensity, SpectralPair};
use crate::geometry::Geometry;
use crate::grid::TransformGrid;
use crate::multipliers::{eta, eta_inverse, eta_prime, p1, p2, spectral_bound};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Seven point central first derivative at the s = 0 node.
fn node_derivative(f: &[Complex64], n2: usize, ds: f64) -> Complex64 {
    ((f[n2 + 1] - f[n2 - 1]) * 45.0 - (f[n2 + 2] - f[n2 - 2]) * 9.0 + (f[n2 + 3] - f[n2 - 3]))
        / (60.0 * ds)
}

/// Seven point central second derivative at the s = 0 node.
fn node_second_derivative(f: &[Complex64], n2: usize, ds: f64) -> Complex64 {
    ((f[n2 + 1] + f[n2 - 1]) * 270.0 - (f[n2 + 2] + f[n2 - 2]) * 27.0
        + (f[n2 + 3] + f[n2 - 3]) * 2.0
        - f[n2] * 490.0)
        / (180.0 * ds * ds)
}

impl SpectralPair {
    /// Transmission operator symbol: eta on the antisymmetric line, -eta on
    /// the symmetric line.
    pub fn apply_np(&self) -> Self {
        let t0 = self.theta0();
        self.map_lines(|s, v| v * eta(t0, s), |s, v| -v * eta(t0, s))
    }

    /// Single layer symbol: -p1 and -p2.  The symmetric node takes the
    /// regular part -f2''(0) / (2 pi); see the module notes.
    pub fn apply_single_layer(&self) -> Self {
        let t0 = self.theta0();
        let n2 = self.grid().zero_index();
        let mut out = self.map_lines(
            |s, v| -v * p1(t0, s),
            |s, v| if s == 0.0 { Complex64::new(0.0, 0.0) } else { -v * p2(t0, s).unwrap() },
        );
        out.f2[n2] = -node_second_derivative(&self.f2, n2, self.grid().d_s()) / (2.0 * PI);
        out
    }

    /// Resolvent of the transmission operator at a spectral parameter off the
    /// two symbol ranges: divides by (lambda - eta) and (lambda + eta).
    pub fn apply_resolvent(&self, lambda: Complex64) -> Self {
        let t0 = self.theta0();
        self.map_lines(|s, v| v / (lambda - eta(t0, s)), |s, v| v / (lambda + eta(t0, s)))
    }

    /// Weighted inner product, conjugate linear in `other`.
    pub fn wstar_inner(&self, other: &SpectralPair) -> Result<Complex64> {
        self.same_shape(other)?;
        let t0 = self.theta0();
        let grid = self.grid();
        let n2 = grid.zero_index();
        let ds = grid.d_s();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..grid.len() {
            let s = grid.s(k);
            acc += self.f1[k] * other.f1[k].conj() * p1(t0, s);
            if k != n2 {
                acc += self.f2[k] * other.f2[k].conj() * p2(t0, s).unwrap();
            }
        }
        // Node term: p2 f2 conj(g2) -> f2'(0) conj(g2'(0)) / pi.
        acc += node_derivative(&self.f2, n2, ds) * node_derivative(&other.f2, n2, ds).conj() / PI;
        Ok(acc * 0.5 * ds)
    }

    pub fn wstar_norm_sq(&self) -> f64 {
        self.wstar_inner(self).expect("same pair").re
    }

    /// Spectral projection of the transmission operator at threshold t,
    /// realized as a sharp frequency cutoff on each line.
    pub fn spectral_projection(&self, t: f64) -> Result<Self> {
        let b = spectral_bound(self.theta0());
        if !t.is_finite() || t < -b || t > b {
            return Err(Error::SpectralParamRange { t, b });
        }
        if t == b {
            return Ok(self.clone());
        }
        let zero = Complex64::new(0.0, 0.0);
        if t == -b {
            return Ok(self.map_lines(|_, _| zero, |_, _| zero));
        }
        if t == 0.0 {
            return Ok(self.symmetric_part());
        }
        if t > 0.0 {
            let st = eta_inverse(self.theta0(), t)?;
            Ok(self.map_lines(|s, v| if s <= -st || s > st { v } else { zero }, |_, v| v))
        } else {
            let st = eta_inverse(self.theta0(), -t)?;
            Ok(self.map_lines(|_, _| zero, |s, v| if -st < s && s <= st { v } else { zero }))
        }
    }

    /// Projection onto the antisymmetric line.
    pub fn antisymmetric_part(&self) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        self.map_lines(|_, v| v, |_, _| zero)
    }

    /// Projection onto the symmetric line.
    pub fn symmetric_part(&self) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        self.map_lines(|_, _| zero, |_, v| v)
    }
}

/// Semi-discrete spectral measure of a boundary density: evaluates the two
/// frequency lines at arbitrary s by direct summation over the stored
/// pullbacks, and from them the density of the measure <phi, E_t phi>.
#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    geom: Geometry,
    grid: TransformGrid,
    /// Pullback of the antisymmetric part on the lower arc.
    c1: Vec<Complex64>,
    /// Pullback of the symmetric part.
    c2: Vec<Complex64>,
}

impl SpectralMeasure {
    pub fn new(density: &BoundaryDensity) -> Self {
        use crate::geometry::Side;
        let proj = density.project_mean_zero();
        let cp = proj.pullback(Side::Plus);
        let cm = proj.pullback(Side::Minus);
        let c1 = cp.iter().zip(&cm).map(|(p, m)| (p - m) * 0.5).collect();
        let c2 = cp.iter().zip(&cm).map(|(p, m)| (p + m) * 0.5).collect();
        SpectralMeasure { geom: density.geometry().clone(), grid: density.grid().clone(), c1, c2 }
    }

    pub fn f1_at(&self, s: f64) -> Complex64 {
        self.grid.eval_forward_at(&self.c1, s) * 2.0
    }

    pub fn f2_at(&self, s: f64) -> Complex64 {
        self.grid.eval_forward_at(&self.c2, s) * 2.0
    }

    /// Density of the spectral measure at t in (-b, 0) or (0, b).  Positive
    /// thresholds see the antisymmetric line through s = eta^(-1)(t),
    /// negative ones the symmetric line through s = eta^(-1)(-t).
    pub fn density(&self, t: f64) -> Result<f64> {
        let t0 = self.geom.theta0();
        let b = spectral_bound(t0);
        if !t.is_finite() || t == 0.0 || t.abs() >= b {
            return Err(Error::SpectralParamRange { t, b });
        }
        let s = eta_inverse(t0, t.abs())?;
        let dp = eta_prime(t0, s).abs();
        let (w, m2) = if t > 0.0 {
            (p1(t0, s), self.f1_at(s).norm_sqr() + self.f1_at(-s).norm_sqr())
        } else {
            (p2(t0, s).unwrap(), self.f2_at(s).norm_sqr() + self.f2_at(-s).norm_sqr())
        };
        Ok(w * m2 / (2.0 * dp))
    }
}
