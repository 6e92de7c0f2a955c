//! Boundary densities on the two arcs and their frequency-side image.
//!
//! A `BoundaryDensity` stores samples of a charge density on both arcs at the
//! points Phi(xi_i, +/- theta0) of a shared xi grid.  A `SpectralPair` stores
//! the two scalar lines (f1, f2) obtained by pulling the density back to the
//! strip, Fourier transforming each arc, and mixing with the unitary
//!
//!   f1 = F[phi_+ / h] - F[phi_- / h],   f2 = F[phi_+ / h] + F[phi_- / h],
//!
//! so f1 carries the antisymmetric part of the density and f2 the symmetric
//! part.  Densities are projected onto mean zero before transforming; the
//! single layer potential only sees that subspace and the frequency symbols
//! are singular on constants.

use crate::geometry::{Geometry, PlanePoint, Side};
use crate::grid::TransformGrid;
use crate::{Error, Result};
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct BoundaryDensity {
    geom: Geometry,
    grid: TransformGrid,
    /// Samples on the lower arc, indexed like the xi grid.
    pub plus: Vec<Complex64>,
    /// Samples on the upper arc.
    pub minus: Vec<Complex64>,
}

impl BoundaryDensity {
    pub fn new(
        geom: Geometry,
        grid: TransformGrid,
        plus: Vec<Complex64>,
        minus: Vec<Complex64>,
    ) -> Result<Self> {
        if plus.len() != grid.len() || minus.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(BoundaryDensity { geom, grid, plus, minus })
    }

    /// Sample a function of the boundary point on both arcs.
    pub fn from_fn(
        geom: &Geometry,
        grid: &TransformGrid,
        mut f: impl FnMut(PlanePoint, Side) -> Complex64,
    ) -> Self {
        let sample = |side, f: &mut dyn FnMut(PlanePoint, Side) -> Complex64| {
            (0..grid.len()).map(|i| f(geom.boundary_point(grid.xi(i), side), side)).collect()
        };
        BoundaryDensity {
            geom: geom.clone(),
            grid: grid.clone(),
            plus: sample(Side::Plus, &mut f),
            minus: sample(Side::Minus, &mut f),
        }
    }

    /// Sample densities given directly in the strip coordinate.
    pub fn from_strip_fn(
        geom: &Geometry,
        grid: &TransformGrid,
        mut f: impl FnMut(f64, Side) -> Complex64,
    ) -> Self {
        BoundaryDensity {
            geom: geom.clone(),
            grid: grid.clone(),
            plus: (0..grid.len()).map(|i| f(grid.xi(i), Side::Plus)).collect(),
            minus: (0..grid.len()).map(|i| f(grid.xi(i), Side::Minus)).collect(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn grid(&self) -> &TransformGrid {
        &self.grid
    }

    pub fn values(&self, side: Side) -> &[Complex64] {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// Pullback to the strip: density values divided by the scale factor.
    pub fn pullback(&self, side: Side) -> Vec<Complex64> {
        (0..self.grid.len())
            .map(|i| self.values(side)[i] * self.geom.arc_element(self.grid.xi(i)))
            .collect()
    }

    /// Total charge: the rectangle rule for the arclength integral of the
    /// density over both arcs.
    pub fn total_charge(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.grid.len() {
            let w = self.geom.arc_element(self.grid.xi(i));
            acc += (self.plus[i] + self.minus[i]) * w;
        }
        acc * self.grid.d_xi()
    }

    /// Arclength inner product, conjugate linear in `other`.
    pub fn l2_inner(&self, other: &BoundaryDensity) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.grid.len() {
            let w = self.geom.arc_element(self.grid.xi(i));
            acc += (self.plus[i] * other.plus[i].conj() + self.minus[i] * other.minus[i].conj()) * w;
        }
        Ok(acc * self.grid.d_xi())
    }

    pub fn max_abs(&self) -> f64 {
        self.plus.iter().chain(&self.minus).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Rectangle rule length of the boundary seen by this grid; the exact
    /// normalizer for making the discrete charge functional vanish.
    fn discrete_boundary_length(&self) -> f64 {
        let sum: f64 = (0..self.grid.len()).map(|i| self.geom.arc_element(self.grid.xi(i))).sum();
        2.0 * sum * self.grid.d_xi()
    }

    /// Subtract a constant so the total charge vanishes.
    pub fn project_mean_zero(&self) -> Self {
        let mean = self.total_charge() / Complex64::new(self.discrete_boundary_length(), 0.0);
        let shift = |v: &[Complex64]| v.iter().map(|x| x - mean).collect();
        BoundaryDensity {
            geom: self.geom.clone(),
            grid: self.grid.clone(),
            plus: shift(&self.plus),
            minus: shift(&self.minus),
        }
    }

    /// Check that the total charge is negligible against the density size.
    pub fn validate_mean_zero(&self, rel_tol: f64) -> Result<()> {
        let scale = self.max_abs() * self.geom.boundary_length();
        if scale == 0.0 {
            return Ok(());
        }
        let relative_mean = self.total_charge().norm() / scale;
        if relative_mean > rel_tol {
            return Err(Error::NotMeanZero { relative_mean });
        }
        Ok(())
    }

    /// Largest pullback magnitude on the outermost tenth of the grid,
    /// relative to the overall largest.  Small values mean the grid window
    /// captured the density; values near one mean truncation error.
    pub fn edge_decay(&self) -> f64 {
        let n = self.grid.len();
        let margin = n / 10;
        let mut edge: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for side in Side::BOTH {
            let pb = self.pullback(side);
            for (i, v) in pb.iter().enumerate() {
                let m = v.norm();
                peak = peak.max(m);
                if i < margin || i >= n - margin {
                    edge = edge.max(m);
                }
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }
}

/// Frequency-side image of a mean zero boundary density.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    grid: TransformGrid,
    theta0: f64,
    /// Antisymmetric line, samples on the s grid.
    pub f1: Vec<Complex64>,
    /// Symmetric line; its value at s = 0 vanishes for mean zero densities.
    pub f2: Vec<Complex64>,
}

impl SpectralPair {
    pub fn new(grid: TransformGrid, theta0: f64, f1: Vec<Complex64>, f2: Vec<Complex64>) -> Result<Self> {
        if f1.len() != grid.len() || f2.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(SpectralPair { grid, theta0, f1, f2 })
    }

    pub fn grid(&self) -> &TransformGrid {
        &self.grid
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub(crate) fn same_shape(&self, other: &SpectralPair) -> Result<()> {
        if self.grid != other.grid || self.theta0 != other.theta0 {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Map both lines through frequency symbols.
    pub fn map_lines(
        &self,
        mut m1: impl FnMut(f64, Complex64) -> Complex64,
        mut m2: impl FnMut(f64, Complex64) -> Complex64,
    ) -> Self {
        let n = self.grid.len();
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        for k in 0..n {
            let s = self.grid.s(k);
            f1.push(m1(s, self.f1[k]));
            f2.push(m2(s, self.f2[k]));
        }
        SpectralPair { grid: self.grid.clone(), theta0: self.theta0, f1, f2 }
    }

    pub fn max_abs(&self) -> f64 {
        self.f1.iter().chain(&self.f2).map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl BoundaryDensity {
    /// Forward transform onto the two frequency lines.  The density is
    /// projected onto mean zero first, which pins f2(0) to zero.
    pub fn to_spectral(&self) -> SpectralPair {
        let proj = self.project_mean_zero();
        let fp = self.grid.fourier_forward(&proj.pullback(Side::Plus));
        let fm = self.grid.fourier_forward(&proj.pullback(Side::Minus));
        let f1: Vec<Complex64> = fp.iter().zip(&fm).map(|(p, m)| p - m).collect();
        let mut f2: Vec<Complex64> = fp.iter().zip(&fm).map(|(p, m)| p + m).collect();
        // Mean zero makes this a roundoff residual; pin it exactly so the
        // symmetric symbols, singular at s = 0, never see it.
        f2[self.grid.zero_index()] = Complex64::new(0.0, 0.0);
        SpectralPair { grid: self.grid.clone(), theta0: self.geom.theta0(), f1, f2 }
    }
}

impl SpectralPair {
    /// Inverse transform back to arc samples.
    pub fn to_boundary(&self, geom: &Geometry) -> Result<BoundaryDensity> {
        if geom.theta0() != self.theta0 {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.len();
        let cp: Vec<Complex64> = (0..n).map(|k| (self.f1[k] + self.f2[k]) * 0.5).collect();
        let cm: Vec<Complex64> = (0..n).map(|k| (self.f2[k] - self.f1[k]) * 0.5).collect();
        let gp = self.grid.fourier_inverse(&cp);
        let gm = self.grid.fourier_inverse(&cm);
        let to_arc = |g: Vec<Complex64>, grid: &TransformGrid| -> Vec<Complex64> {
            g.into_iter()
                .enumerate()
                .map(|(i, v)| v * geom.boundary_scale(grid.xi(i)))
                .collect()
        };
        BoundaryDensity::new(geom.clone(), self.grid.clone(), to_arc(gp, &self.grid), to_arc(gm, &self.grid))
    }

    /// Density value at one arbitrary arc coordinate.  One slow transform
    /// per call; meant for comparisons at points off the sample grid.
    pub fn to_boundary_at(&self, geom: &Geometry, xi: f64, side: Side) -> Result<Complex64> {
        if geom.theta0() != self.theta0 {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.len();
        let line: Vec<Complex64> =
            (0..n).map(|k| (self.f1[k] * side.sign() + self.f2[k]) * 0.5).collect();
        Ok(self.grid.eval_inverse_at(&line, xi) * geom.boundary_scale(xi))
    }
}
