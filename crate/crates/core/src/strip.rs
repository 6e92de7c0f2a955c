//! Off-boundary evaluation of the single layer potential through the strip.
//!
//! For a mean zero density the potential pulled back to the strip splits into
//! an antisymmetric part driven by f1/2 and a symmetric part driven by f2/2.
//! Each frequency contributes a mode e^(i s xi) T(theta) where T is glued
//! from sinh respectively cosh branches so the result is continuous across
//! the arcs theta = +-theta0, smooth across theta = +-pi, and its theta flux
//! jumps by the pullback of the density.
//!
//! The symmetric integrand carries a principal value pole A/s at s = 0 with
//! theta independent strength A = -f2'(0)/(2 pi).  The pole is split off
//! against the model A e^(-s^2/2)/s, whose transform is the closed form
//! A i pi erf(xi/sqrt 2); the smooth remainder is summed over the grid.  This
//! keeps boundary values, gradients and far field behavior free of the
//! sawtooth alias a naive principal value sum on a finite grid produces.
//!
//! The one remaining gauge freedom (a global additive constant) is fixed by
//! the value at xi = theta = 0, the image of infinity, where the potential of
//! a mean zero density vanishes.

use crate::density::{BoundaryDensity, SpectralPair};
use crate::geometry::{Geometry, PlanePoint, Side};
use crate::grid::TransformGrid;
use crate::multipliers::em1;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// sinh(s u) sinh(s v) / (s sinh(s pi)), scaled free of overflow.
/// Valid for |u| + |v| <= pi, which covers every branch below.
fn ss_ratio(u: f64, v: f64, s: f64) -> f64 {
    if s == 0.0 {
        return u * v / PI;
    }
    let a = s.abs();
    let (au, av) = (u.abs(), v.abs());
    let sign = u.signum() * v.signum();
    sign * (a * (au + av - PI)).exp() * em1(2.0 * a * au) * em1(2.0 * a * av)
        / (2.0 * a * em1(2.0 * a * PI))
}

/// cosh(s u) cosh(s v) / (s sinh(s pi)); pole at s = 0, callers exclude it.
/// Even in s: the denominator equals |s| sinh(|s| pi).
fn cc_ratio(u: f64, v: f64, s: f64) -> f64 {
    debug_assert!(s != 0.0);
    let a = s.abs();
    let (au, av) = (u.abs(), v.abs());
    (a * (au + av - PI)).exp()
        * (1.0 + (-2.0 * a * au).exp())
        * (1.0 + (-2.0 * a * av).exp())
        / (2.0 * a * em1(2.0 * a * PI))
}

/// sinh(s u) cosh(s v) / sinh(s pi).
fn sc_ratio(u: f64, v: f64, s: f64) -> f64 {
    if s == 0.0 {
        return u / PI;
    }
    let a = s.abs();
    let (au, av) = (u.abs(), v.abs());
    u.signum() * (a * (au + av - PI)).exp() * em1(2.0 * a * au) * (1.0 + (-2.0 * a * av).exp())
        / (2.0 * em1(2.0 * a * PI))
}

/// cosh(s u) sinh(s v) / sinh(s pi).
fn cs_ratio(u: f64, v: f64, s: f64) -> f64 {
    if s == 0.0 {
        return v / PI;
    }
    let a = s.abs();
    let (au, av) = (u.abs(), v.abs());
    v.signum() * (a * (au + av - PI)).exp() * (1.0 + (-2.0 * a * au).exp()) * em1(2.0 * a * av)
        / (2.0 * em1(2.0 * a * PI))
}

/// Antisymmetric mode shape.
fn mode_odd(t0: f64, s: f64, theta: f64) -> f64 {
    if theta > t0 {
        ss_ratio(t0, theta - PI, s)
    } else if theta >= -t0 {
        ss_ratio(t0 - PI, theta, s)
    } else {
        -mode_odd(t0, s, -theta)
    }
}

/// Symmetric mode shape; excludes s = 0.
fn mode_even(t0: f64, s: f64, theta: f64) -> f64 {
    let th = theta.abs();
    if th > t0 {
        cc_ratio(t0, th - PI, s)
    } else {
        cc_ratio(t0 - PI, th, s)
    }
}

/// Theta derivative of the antisymmetric mode shape.  On the arcs the branch
/// from |theta| <= theta0 is returned.
fn mode_odd_dtheta(t0: f64, s: f64, theta: f64) -> f64 {
    if theta > t0 {
        sc_ratio(t0, theta - PI, s)
    } else if theta >= -t0 {
        sc_ratio(t0 - PI, theta, s)
    } else {
        mode_odd_dtheta(t0, s, -theta)
    }
}

/// Theta derivative of the symmetric mode shape.
fn mode_even_dtheta(t0: f64, s: f64, theta: f64) -> f64 {
    if theta > t0 {
        cs_ratio(t0, theta - PI, s)
    } else if theta >= -t0 {
        cs_ratio(t0 - PI, theta, s)
    } else {
        -mode_even_dtheta(t0, s, -theta)
    }
}

/// Seven point stencils matching the node treatment in the frequency layer.
fn stencil_derivative(f: &[Complex64], n2: usize, ds: f64) -> Complex64 {
    ((f[n2 + 1] - f[n2 - 1]) * 45.0 - (f[n2 + 2] - f[n2 - 2]) * 9.0 + (f[n2 + 3] - f[n2 - 3]))
        / (60.0 * ds)
}

fn stencil_second_derivative(f: &[Complex64], n2: usize, ds: f64) -> Complex64 {
    ((f[n2 + 1] + f[n2 - 1]) * 270.0 - (f[n2 + 2] + f[n2 - 2]) * 27.0
        + (f[n2 + 3] + f[n2 - 3]) * 2.0
        - f[n2] * 490.0)
        / (180.0 * ds * ds)
}

#[derive(Clone, Debug)]
pub struct StripSolution {
    geom: Geometry,
    grid: TransformGrid,
    /// Antisymmetric coefficients f1/2.
    codd: Vec<Complex64>,
    /// Symmetric coefficients f2/2.
    ceven: Vec<Complex64>,
    /// Principal value strength of the symmetric integrand at s = 0.
    pole: Complex64,
    /// Regular part of the symmetric integrand at s = 0 (theta independent).
    node_reg: Complex64,
    /// Additive constant pinning the value at the image of infinity to zero.
    even_const: Complex64,
}

impl StripSolution {
    /// Build the potential of a mean zero density.
    pub fn solve(density: &BoundaryDensity) -> Result<Self> {
        density.validate_mean_zero(1e-8)?;
        Self::from_pair(density.geometry().clone(), &density.to_spectral())
    }

    /// Build from frequency lines directly, e.g. resolvent output.
    pub fn from_pair(geom: Geometry, pair: &SpectralPair) -> Result<Self> {
        if pair.theta0() != geom.theta0() {
            return Err(Error::GridMismatch);
        }
        let grid = pair.grid().clone();
        let half = Complex64::new(0.5, 0.0);
        let codd: Vec<Complex64> = pair.f1.iter().map(|v| v * half).collect();
        let ceven: Vec<Complex64> = pair.f2.iter().map(|v| v * half).collect();
        let n2 = grid.zero_index();
        let ds = grid.d_s();
        let pole = -stencil_derivative(&ceven, n2, ds) / PI;
        let node_reg = -stencil_second_derivative(&ceven, n2, ds) / (2.0 * PI);
        let mut sol = StripSolution {
            geom,
            grid,
            codd,
            ceven,
            pole,
            node_reg,
            even_const: Complex64::new(0.0, 0.0),
        };
        sol.even_const = -sol.eval_strip(0.0, 0.0);
        Ok(sol)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn grid(&self) -> &TransformGrid {
        &self.grid
    }

    /// Symmetric integrand with the pole model removed; finite everywhere.
    fn even_term(&self, k: usize, s: f64, theta: f64) -> Complex64 {
        if k == self.grid.zero_index() {
            self.node_reg
        } else {
            -self.ceven[k] * mode_even(self.geom.theta0(), s, theta)
                - self.pole * (-0.5 * s * s).exp() / s
        }
    }

    /// Potential in strip coordinates.
    pub fn eval_strip(&self, xi: f64, theta: f64) -> Complex64 {
        let t0 = self.geom.theta0();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.grid.len() {
            let s = self.grid.s(k);
            let rot = Complex64::new((s * xi).cos(), (s * xi).sin());
            let term = self.codd[k] * mode_odd(t0, s, theta) + self.even_term(k, s, theta);
            acc += term * rot;
        }
        let scale = self.grid.d_s() / (2.0 * PI).sqrt();
        let pv = self.pole * Complex64::new(0.0, PI * libm::erf(xi / 2f64.sqrt()))
            / (2.0 * PI).sqrt();
        acc * scale + pv + self.even_const
    }

    /// Gradient (d/dxi, d/dtheta) in strip coordinates.  On the arcs the
    /// theta derivative of the side |theta| <= theta0 is returned.
    pub fn eval_gradient_strip(&self, xi: f64, theta: f64) -> (Complex64, Complex64) {
        let t0 = self.geom.theta0();
        let mut dxi = Complex64::new(0.0, 0.0);
        let mut dth = Complex64::new(0.0, 0.0);
        for k in 0..self.grid.len() {
            let s = self.grid.s(k);
            let rot = Complex64::new((s * xi).cos(), (s * xi).sin());
            let term = self.codd[k] * mode_odd(t0, s, theta) + self.even_term(k, s, theta);
            dxi += term * rot * Complex64::new(0.0, s);
            dth += (self.codd[k] * mode_odd_dtheta(t0, s, theta)
                - self.ceven[k] * mode_even_dtheta(t0, s, theta))
                * rot;
        }
        let scale = self.grid.d_s() / (2.0 * PI).sqrt();
        let pv_dxi = self.pole * Complex64::new(0.0, (-0.5 * xi * xi).exp());
        (dxi * scale + pv_dxi, dth * scale)
    }

    /// Boundary values of the potential on one arc at all grid points.
    /// Same semi-discrete sum as `eval_strip` on the arc, done with one FFT.
    pub fn arc_values(&self, side: Side) -> Vec<Complex64> {
        let t0 = self.geom.theta0();
        let theta = side.sign() * t0;
        let n = self.grid.len();
        let line: Vec<Complex64> = (0..n)
            .map(|k| {
                let s = self.grid.s(k);
                self.codd[k] * mode_odd(t0, s, theta) + self.even_term(k, s, t0)
            })
            .collect();
        let mut vals = self.grid.fourier_inverse(&line);
        for (i, v) in vals.iter_mut().enumerate() {
            let xi = self.grid.xi(i);
            *v += self.pole * Complex64::new(0.0, PI * libm::erf(xi / 2f64.sqrt()))
                / (2.0 * PI).sqrt()
                + self.even_const;
        }
        vals
    }

    /// Potential at a plane point off the boundary and off the corner cut.
    pub fn eval_plane(&self, z: PlanePoint) -> Result<Complex64> {
        let p = self.geom.map_to_strip(z)?;
        Ok(self.eval_strip(p.xi, p.theta))
    }

    /// Plane gradient (d/dx1, d/dx2) via the conformal chain rule.
    pub fn eval_gradient_plane(&self, z: PlanePoint) -> Result<[Complex64; 2]> {
        let p = self.geom.map_to_strip(z)?;
        let (du_xi, du_th) = self.eval_gradient_strip(p.xi, p.theta);
        let d = self.geom.strip_derivative(z)?;
        Ok([
            du_xi * d.re + du_th * d.im,
            -du_xi * d.im + du_th * d.re,
        ])
    }
}
