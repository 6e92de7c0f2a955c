//! Dipole driven response of the two disk union.
//!
//! A point dipole outside the closed union excites the boundary through the
//! normal flux of its potential.  Because the flux pairs against the
//! generalized eigenfunctions in closed form, the spectral measure of the
//! excitation has an explicit density built from the strip coordinates of the
//! dipole location.  This module evaluates that density, integrates it
//! against the dissipation kernel to rel 1e-6, extracts blow-up exponents
//! and limit constants from delta sweeps, and evaluates the induced
//! potential off the boundary through the resolvent.
//!
//! The density diverges like (b - |t|)^(-1/2) at the band edges and like
//! |log t| |t|^(-r) at the center, where r = |psi2|/theta0 < 1 grows as the
//! dipole approaches the boundary.  The band integrals substitute these ends
//! away (square root, respectively exponential maps) and flatten the
//! dissipation peak with an arctangent map, so the adaptive rule only ever
//! sees smooth integrands.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::density::BoundaryDensity;
use crate::geometry::{Geometry, PlanePoint};
use crate::grid::TransformGrid;
use crate::multipliers::{em1, eta, eta_curvature, eta_inverse, eta_inverse_gap, eta_prime};
use crate::quad::{adaptive_quad, aitken_limit, fit_line};
use crate::strip::StripSolution;
use crate::{Error, Result};

/// Polarizations closer than this (relative) to a level line of one strip
/// coordinate are rejected: the corresponding coupling vanishes and the
/// blow-up constants degenerate.
const ALIGN_TOL: f64 = 1e-12;

/// Relative tolerance of the inner adaptive passes; the guarantee on the
/// assembled band integrals is three orders looser.
const INNER_REL: f64 = 1e-9;

/// A unit point dipole strictly outside the closed union of the two disks.
///
/// Construction resolves the strip coordinates of the location once and
/// caches the couplings of the polarization to the two coordinate gradients;
/// everything downstream reads those four numbers.
#[derive(Clone, Debug)]
pub struct DipoleSource {
    geom: Geometry,
    z: PlanePoint,
    a: [f64; 2],
    psi1: f64,
    psi2: f64,
    /// a . grad psi1 at z.
    d1: f64,
    /// a . grad psi2 at z.
    d2: f64,
}

impl DipoleSource {
    /// The polarization is normalized; its direction must couple to both
    /// strip coordinates and the location must avoid the symmetry axis,
    /// where the induced spectral density degenerates.
    pub fn new(geom: &Geometry, z: PlanePoint, a: [f64; 2]) -> Result<Self> {
        let n = (a[0] * a[0] + a[1] * a[1]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidQuery("polarization must be a nonzero finite vector".into()));
        }
        let a = [a[0] / n, a[1] / n];
        if !geom.is_exterior(z) {
            return Err(Error::InvalidQuery(format!(
                "dipole at ({}, {}) must sit strictly outside the closed union",
                z.x1, z.x2
            )));
        }
        let p = geom.map_to_strip(z)?;
        if p.theta == 0.0 {
            return Err(Error::InvalidQuery(
                "dipole on the symmetry axis: the center decay exponent degenerates".into(),
            ));
        }
        let dz = geom.strip_derivative(z)?;
        // The strip map is conformal, so the coordinate gradients are the
        // rotated derivative and its orthogonal complement.
        let d1 = a[0] * dz.re - a[1] * dz.im;
        let d2 = a[0] * dz.im + a[1] * dz.re;
        let scale = dz.norm();
        if d1.abs() <= ALIGN_TOL * scale || d2.abs() <= ALIGN_TOL * scale {
            return Err(Error::InvalidQuery(
                "polarization aligned with a strip coordinate level line decouples one parity"
                    .into(),
            ));
        }
        Ok(DipoleSource { geom: geom.clone(), z, a, psi1: p.xi, psi2: p.theta, d1, d2 })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn location(&self) -> PlanePoint {
        self.z
    }

    pub fn polarization(&self) -> [f64; 2] {
        self.a
    }

    /// Strip coordinates of the location (xi component).
    pub fn psi1(&self) -> f64 {
        self.psi1
    }

    /// Strip coordinates of the location (theta component), nonzero and of
    /// magnitude below the half opening angle.
    pub fn psi2(&self) -> f64 {
        self.psi2
    }

    /// Center decay exponent |psi2|/theta0 in (0, 1).
    pub fn center_exponent(&self) -> f64 {
        self.psi2.abs() / self.geom.theta0()
    }

    /// Free potential of the dipole; undefined at the source point itself.
    pub fn potential(&self, x: PlanePoint) -> f64 {
        let (r1, r2) = (x.x1 - self.z.x1, x.x2 - self.z.x2);
        let rr = r1 * r1 + r2 * r2;
        (self.a[0] * r1 + self.a[1] * r2) / (2.0 * PI * rr)
    }

    /// Gradient of the free potential.
    pub fn potential_gradient(&self, x: PlanePoint) -> [f64; 2] {
        let (r1, r2) = (x.x1 - self.z.x1, x.x2 - self.z.x2);
        let rr = r1 * r1 + r2 * r2;
        let ar = self.a[0] * r1 + self.a[1] * r2;
        let c = 1.0 / (2.0 * PI * rr * rr);
        [(self.a[0] * rr - 2.0 * ar * r1) * c, (self.a[1] * rr - 2.0 * ar * r2) * c]
    }
}

/// Normal flux of the dipole potential sampled on both arcs.  Mean zero up
/// to quadrature error because the potential is harmonic inside the union.
pub fn dipole_normal_derivative(src: &DipoleSource, grid: &TransformGrid) -> BoundaryDensity {
    let geom = src.geometry().clone();
    BoundaryDensity::from_fn(&geom, grid, |x, side| {
        let nu = geom.outward_normal(x, side).expect("grid samples the boundary");
        let g = src.potential_gradient(x);
        Complex64::new(nu[0] * g[0] + nu[1] * g[1], 0.0)
    })
}

/// s^2 p1(s) / sinh^2(s theta0), written free of overflow.  Even, positive,
/// with limit (pi - theta0)/(pi theta0) at s = 0.
fn odd_gradient_ratio(t0: f64, s: f64) -> f64 {
    if s == 0.0 {
        return (PI - t0) / (PI * t0);
    }
    let sa = s.abs();
    2.0 * sa * (-2.0 * sa * t0).exp() * em1(2.0 * sa * (PI - t0))
        / (em1(2.0 * sa * t0) * em1(2.0 * sa * PI))
}

/// s^2 p2(s) / cosh^2(s theta0); limit 1/pi at s = 0.
fn even_gradient_ratio(t0: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0 / PI;
    }
    let sa = s.abs();
    2.0 * sa * (-2.0 * sa * t0).exp() * (1.0 + (-2.0 * sa * (PI - t0)).exp())
        / ((1.0 + (-2.0 * sa * t0).exp()) * em1(2.0 * sa * PI))
}

/// Squared pairing of the dipole flux against the family member (s, j): the
/// weight that builds the spectral density of the excitation.
///
/// The gradient factor carries exp(2 s (|psi2| - theta0)); since |psi2| is
/// strictly below theta0 it decays, and the exponentials are grouped so no
/// intermediate overflows for any s the band inversion can produce.
pub fn g_factor(src: &DipoleSource, s: f64, j: u8) -> Result<f64> {
    if !(j == 1 || j == 2) {
        return Err(Error::InvalidQuery(format!("parity index {j} not in {{1, 2}}")));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::Domain(format!("frequency must be finite and nonnegative, got {s}")));
    }
    let t0 = src.geom.theta0();
    let psi = src.psi2.abs();
    let (d1s, d2s) = (src.d1 * src.d1, src.d2 * src.d2);
    let e = eta(t0, s);
    let grad_sq = if j == 1 {
        // cosh^2(s psi2) couples d2, sinh^2 couples d1.
        let q = (-2.0 * s * psi).exp();
        let hyp = d2s * (1.0 + q) * (1.0 + q) + d1s * (1.0 - q) * (1.0 - q);
        let scale = if s == 0.0 {
            odd_gradient_ratio(t0, 0.0)
        } else {
            0.5 * s * (2.0 * s * (psi - t0)).exp() * em1(2.0 * s * (PI - t0))
                / (em1(2.0 * s * t0) * em1(2.0 * s * PI))
        };
        if s == 0.0 { scale * d2s } else { scale * hyp }
    } else {
        let q = (-2.0 * s * psi).exp();
        let hyp = d2s * (1.0 - q) * (1.0 - q) + d1s * (1.0 + q) * (1.0 + q);
        let scale = if s == 0.0 {
            even_gradient_ratio(t0, 0.0)
        } else {
            0.5 * s * (2.0 * s * (psi - t0)).exp() * (1.0 + (-2.0 * s * (PI - t0)).exp())
                / ((1.0 + (-2.0 * s * t0).exp()) * em1(2.0 * s * PI))
        };
        if s == 0.0 { scale * d1s } else { scale * hyp }
    };
    let lam = if j == 1 { e - 0.5 } else { e + 0.5 };
    Ok(lam * lam * grad_sq / (4.0 * PI))
}

/// Density of the spectral measure of the dipole flux at threshold t.
///
/// Positive thresholds read the antisymmetric family, negative ones the
/// symmetric family.  The value is +infinity at exactly t = +-b (the
/// inverse square root edge) and the band center is rejected because the
/// density is not locally integrable against point evaluation there.
pub fn mu_prime(src: &DipoleSource, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::InvalidQuery(
            "spectral density diverges at the band center; query either side".into(),
        ));
    }
    let t0 = src.geom.theta0();
    let s = eta_inverse(t0, t.abs())?;
    let j = if t > 0.0 { 1 } else { 2 };
    let g = g_factor(src, s, j)?;
    Ok(2.0 * g / eta_prime(t0, s).abs())
}

/// One half band integral of mu' against the Lorentzian dissipation kernel
/// centered at `center` = (lambda0, delta), or against 1 when absent, mapped
/// so every piece is smooth: an exponential map absorbs the center edge, a
/// square root map the band edge, and an arctangent map the kernel peak when
/// it sits inside this half.
///
/// `sgn` selects the half band: +1 integrates over (0, b) with the
/// antisymmetric branch, -1 over (-b, 0) reflected onto (0, b).
///
/// The distance to the kernel center is always formed in the coordinates of
/// the active map, never by subtracting two nearby thresholds: recovering t
/// from the map variable first would quantize the distance to the band edge
/// at the resolution of b, and the resulting pointwise noise freezes the
/// adaptive refinement (the noise floor and the per-level tolerance then
/// shrink at the same rate, so the recursion tree grows without bound).
/// The density near the edge is read the same way, through the edge gap
/// b - eta = u^2 instead of through eta_inverse at a rounded t.
fn half_band_integral(src: &DipoleSource, sgn: f64, center: Option<(f64, f64)>) -> Result<f64> {
    let t0 = src.geom.theta0();
    let b = src.geom.spectral_bound();
    let k = eta_curvature(t0);
    let j = if sgn > 0.0 { 1 } else { 2 };
    // Kernel center in this half's local coordinates; negative when the
    // kernel sits on the other half.  cl is only read through w_of's dt.
    let cl = match center {
        Some((l0, _)) => sgn * l0,
        None => 0.0,
    };
    let w_of = |dt: f64| match center {
        Some((_, d)) => 1.0 / (dt * dt + d * d),
        None => 1.0,
    };
    let mu_loc = |t: f64| mu_prime(src, sgn * t).expect("interior threshold");

    // Center piece (0, q]: t = e^{-v}.  The range is capped twice over: once
    // where the tail e^{-(1-r) v} v is negligible, and once where the
    // integrand would leave the double range (possible only for sources
    // exponentially close to the boundary, outside the supported regime).
    let beta = src.center_exponent();
    let exp_piece = |q: f64| -> Result<f64> {
        let v0 = (1.0 / q).ln();
        let wmax = match center {
            Some((_, d)) => (1.0 / (d * d)).max(1.0),
            None => 1.0,
        };
        let v_over = (700.0 - wmax.ln() - 7.0) / beta.max(0.1);
        let vmax = (v0 + 45.0 / (1.0 - beta).max(0.065)).min(v_over).min(705.0);
        let g = |v: f64| {
            let t = (-v).exp();
            mu_loc(t) * w_of(t - cl) * t
        };
        Ok(adaptive_quad(g, v0, vmax, INNER_REL, 0.0)?.value)
    };

    // Edge piece of gap size e_lo: t = b - u^2 for u^2 in (0, e_lo].  The
    // inverse square root of the density cancels against du analytically;
    // the gap u^2 feeds the inversion directly, and the kernel center enters
    // through its own gap e0 = b - cl (exactly zero for a kernel at the
    // edge, so dt = -u^2 is exact there).
    let sqrt_piece = |e_lo: f64| -> Result<f64> {
        let umax = e_lo.sqrt();
        let cnorm = (b * k).sqrt();
        let e0 = b - cl;
        let g = |u: f64| {
            let dt = e0 - u * u;
            if u < 1e-30 {
                // Guards the underflow of u^2 only; the limit constant of
                // 2 u / |eta'| carries no error at this size.
                let gv = g_factor(src, u / cnorm, j).expect("inside the family");
                return 2.0 * gv * w_of(dt) / cnorm;
            }
            let s = eta_inverse_gap(t0, u * u).expect("gap inside the band");
            let gv = g_factor(src, s, j).expect("inside the family");
            2.0 * gv / eta_prime(t0, s).abs() * w_of(dt) * 2.0 * u
        };
        Ok(adaptive_quad(g, 0.0, umax, INNER_REL, 0.0)?.value)
    };

    match center {
        Some((_, d)) if cl > 0.0 && cl < b => {
            let m1 = 0.5 * cl;
            let e2 = 0.5 * (b - cl);
            // In the arctangent variable the kernel cancels exactly: the
            // integrand is mu'/delta sampled along t = cl + d tan(tau),
            // spliced to the outer pieces at t = cl/2 and gap e2.
            let alo = (-(m1 / d)).atan();
            let ahi = (e2 / d).atan();
            let g = |tau: f64| mu_loc(cl + d * tau.tan()) / d;
            Ok(exp_piece(m1)?
                + adaptive_quad(g, alo, ahi, INNER_REL, 0.0)?.value
                + sqrt_piece(e2)?)
        }
        _ => Ok(exp_piece(0.5 * b)? + sqrt_piece(0.5 * b)?),
    }
}

/// Integral of mu' against the dissipation kernel 1/((lambda0 - t)^2 +
/// delta^2) over the band, to relative accuracy 1e-6.  lambda0 may lie
/// outside the band, where the integral stays bounded as delta vanishes.
pub fn phi_norm_sq(src: &DipoleSource, lambda0: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("dissipation must be positive, got {delta}")));
    }
    if !lambda0.is_finite() {
        return Err(Error::Domain("threshold must be finite".into()));
    }
    let c = Some((lambda0, delta));
    Ok(half_band_integral(src, 1.0, c)? + half_band_integral(src, -1.0, c)?)
}

/// Total mass of the spectral measure of the dipole flux; equals the squared
/// energy norm of the flux itself.
pub fn spectral_mass(src: &DipoleSource) -> Result<f64> {
    Ok(half_band_integral(src, 1.0, None)? + half_band_integral(src, -1.0, None)?)
}

/// Result of a dissipation sweep: the weighted norms, the fitted log-log
/// slope, the slope after dividing out |log delta| (meaningful at the band
/// center), and the extrapolated limit of the theoretically rescaled
/// sequence.
#[derive(Clone, Debug)]
pub struct RateFit {
    pub deltas: Vec<f64>,
    pub norm_sq: Vec<f64>,
    pub slope: f64,
    pub log_corrected_slope: f64,
    pub limit_constant: f64,
}

fn validate_sweep(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::InvalidQuery("dissipation sweep is empty".into()));
    }
    for d in deltas {
        if !(*d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidQuery(format!("dissipation values must be positive, got {d}")));
        }
    }
    for w in deltas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidQuery(
                "dissipation sweep must be strictly descending".into(),
            ));
        }
    }
    Ok(())
}

/// Default sweep: twelve points, geometric from 1e-2 down to 1e-6.
pub fn default_delta_sweep() -> Vec<f64> {
    (0..12).map(|k| 10f64.powf(-2.0 - 4.0 * k as f64 / 11.0)).collect()
}

/// Fit the blow-up of the weighted norm along a dissipation sweep.
///
/// Requires at least six values spanning three decades.  The limit constant
/// rescales by the exponent the threshold class dictates (interior, band
/// edge, center with its logarithm, or none outside the band) and
/// extrapolates the tail.
pub fn rate_fit(src: &DipoleSource, lambda0: f64, deltas: &[f64]) -> Result<RateFit> {
    validate_sweep(deltas)?;
    if deltas.len() < 6 || deltas[0] / deltas[deltas.len() - 1] < 0.9995e3 {
        return Err(Error::InsufficientDecades);
    }
    let norm_sq = deltas
        .par_iter()
        .map(|&d| phi_norm_sq(src, lambda0, d))
        .collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = norm_sq.iter().map(|y| y.ln()).collect();
    let (slope, _) = fit_line(&lx, &ly);
    let lyc: Vec<f64> =
        norm_sq.iter().zip(deltas).map(|(y, d)| (y / d.ln().abs()).ln()).collect();
    let (log_corrected_slope, _) = fit_line(&lx, &lyc);

    let b = src.geom.spectral_bound();
    let scaled: Vec<f64> = if lambda0 == 0.0 {
        let p = 1.0 + src.center_exponent();
        norm_sq.iter().zip(deltas).map(|(y, d)| y * d.powf(p) / d.ln().abs()).collect()
    } else if (lambda0.abs() - b).abs() <= 1e-12 {
        norm_sq.iter().zip(deltas).map(|(y, d)| y * d.powf(1.5)).collect()
    } else if lambda0.abs() < b {
        norm_sq.iter().zip(deltas).map(|(y, d)| y * d).collect()
    } else {
        norm_sq.clone()
    };
    let limit_constant = aitken_limit(&scaled);
    Ok(RateFit { deltas: deltas.to_vec(), norm_sq, slope, log_corrected_slope, limit_constant })
}

/// The sequence delta * norm of the solution along a sweep.  Over an
/// absolutely continuous spectrum it must decrease to zero: first order
/// blow-up in 1/delta is never reached.
pub fn never_order_check(src: &DipoleSource, lambda0: f64, deltas: &[f64]) -> Result<Vec<f64>> {
    validate_sweep(deltas)?;
    deltas
        .par_iter()
        .map(|&d| phi_norm_sq(src, lambda0, d).map(|y| d * y.sqrt()))
        .collect()
}

/// Spectral parameter of the transmission problem for inclusion permittivity
/// eps_c + i delta in a unit matrix.
pub fn lambda_from_permittivity(eps_c: f64, delta: f64) -> Complex64 {
    Complex64::new(eps_c + 1.0, delta) / Complex64::new(2.0 * (eps_c - 1.0), 2.0 * delta)
}

/// A dissipation study: one source, one threshold, one sweep.  When built
/// from a permittivity the exact spectral parameter map is used instead of
/// the straight line lambda0 + i delta.
#[derive(Clone, Debug)]
pub struct ResonanceQuery {
    pub source: DipoleSource,
    pub lambda0: f64,
    pub deltas: Vec<f64>,
    pub eps_c: Option<f64>,
}

impl ResonanceQuery {
    pub fn new(source: DipoleSource, lambda0: f64, deltas: Vec<f64>) -> Result<Self> {
        if !lambda0.is_finite() {
            return Err(Error::InvalidQuery("threshold must be finite".into()));
        }
        validate_sweep(&deltas)?;
        Ok(ResonanceQuery { source, lambda0, deltas, eps_c: None })
    }

    /// Derive the limiting threshold from the inclusion permittivity.  Only
    /// negative permittivities reach the band; positive contrast stays
    /// outside and the response remains bounded.
    pub fn from_permittivity(source: DipoleSource, eps_c: f64, deltas: Vec<f64>) -> Result<Self> {
        if !eps_c.is_finite() || eps_c == 1.0 {
            return Err(Error::InvalidQuery(format!(
                "permittivity {eps_c} has no finite spectral parameter"
            )));
        }
        validate_sweep(&deltas)?;
        let lambda0 = (eps_c + 1.0) / (2.0 * (eps_c - 1.0));
        Ok(ResonanceQuery { source, lambda0, deltas, eps_c: Some(eps_c) })
    }

    /// Spectral parameter used at a given dissipation.
    pub fn lambda_for(&self, delta: f64) -> Complex64 {
        match self.eps_c {
            Some(e) => lambda_from_permittivity(e, delta),
            None => Complex64::new(self.lambda0, delta),
        }
    }
}

/// Induced total potential at z: the free dipole potential plus the single
/// layer of the transmission solution at spectral parameter lambda.
///
/// Real lambda inside the band is rejected (the resolvent is singular on the
/// essential spectrum); everywhere else the solution follows from dividing
/// the flux lines by lambda -+ eta.
pub fn induced_field(
    src: &DipoleSource,
    grid: &TransformGrid,
    lambda: Complex64,
    z: PlanePoint,
) -> Result<Complex64> {
    let geom = src.geometry();
    let b = geom.spectral_bound();
    if lambda.im == 0.0 && lambda.re.abs() <= b {
        return Err(Error::InvalidQuery(format!(
            "spectral parameter {} lies on the essential band [{:-}, {}]; add dissipation",
            lambda.re, -b, b
        )));
    }
    let flux = dipole_normal_derivative(src, grid);
    let solved = flux.to_spectral().apply_resolvent(lambda);
    let sol = StripSolution::from_pair(geom.clone(), &solved)?;
    Ok(sol.eval_plane(z)? + src.potential(z))
}
