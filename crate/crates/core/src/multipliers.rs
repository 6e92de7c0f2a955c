//! Fourier multiplier symbols of the boundary operators on the infinite strip.
//!
//! With the symmetric transform convention, the single layer acts as
//! -p1(s) on odd components and -p2(s) on even components, and the adjoint
//! double layer acts as +eta(s) / -eta(s).  All evaluations are written in
//! terms of 1 - exp(-x) so they neither overflow for large |s| nor lose
//! precision near s = 0.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Half the essential spectral bound gap: b = 1/2 - theta0/pi.
pub fn spectral_bound(theta0: f64) -> f64 {
    0.5 - theta0 / PI
}

/// Leading Taylor coefficient of eta at s = 0: eta(s) = b (1 - k s^2 + ...).
pub fn eta_curvature(theta0: f64) -> f64 {
    2.0 * theta0 * (PI - theta0) / 3.0
}

#[inline]
pub(crate) fn em1(x: f64) -> f64 {
    -f64::exp_m1(-x)
}

/// Odd-component single layer symbol p1(s) = sinh(s t0) sinh(s (pi-t0)) / (s sinh(s pi)).
///
/// Even in s, positive, with p1(0) = t0 (pi - t0) / pi and |s| p1(s) -> 1/2.
pub fn p1(theta0: f64, s: f64) -> f64 {
    if s == 0.0 {
        return theta0 * (PI - theta0) / PI;
    }
    let sa = s.abs();
    em1(2.0 * sa * theta0) * em1(2.0 * sa * (PI - theta0)) / (2.0 * sa * em1(2.0 * sa * PI))
}

/// Even-component single layer symbol p2(s) = cosh(s t0) cosh(s (pi-t0)) / (s sinh(s pi)).
///
/// Even in s with a double pole at the origin: s^2 p2(s) -> 1/pi.
pub fn p2(theta0: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Err(Error::PoleAtZero);
    }
    let sa = s.abs();
    Ok((1.0 + (-2.0 * sa * theta0).exp()) * (1.0 + (-2.0 * sa * (PI - theta0)).exp())
        / (2.0 * sa * em1(2.0 * sa * PI)))
}

/// Spectral symbol eta(s) = sinh(s (pi - 2 t0)) / (2 sinh(s pi)).
///
/// Even, strictly decreasing on [0, inf), eta(0) = b, eta -> (1/2) e^{-2 t0 |s|}.
pub fn eta(theta0: f64, s: f64) -> f64 {
    if s == 0.0 {
        return spectral_bound(theta0);
    }
    let sa = s.abs();
    let c = PI - 2.0 * theta0;
    0.5 * (-2.0 * theta0 * sa).exp() * em1(2.0 * sa * c) / em1(2.0 * sa * PI)
}

/// Switch point below which eta' and the edge gap use their series forms.
///
/// Below it the closed forms subtract nearly equal terms: the relative noise
/// they leave behind (up to ~1e-12 near s = 1e-3) is enough to freeze
/// adaptive quadrature when the integrand is later divided by eta', so the
/// series must cover the whole cancellation zone, not just a neighborhood of
/// the origin.  The series terms decay factorially and reach machine
/// precision well before the switch.
const SERIES_SWITCH: f64 = 0.5;

/// Derivative of eta in s. Odd in s, eta'(0) = 0.
pub fn eta_prime(theta0: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let sa = s.abs();
    let dv = if sa < SERIES_SWITCH {
        // eta' = M / (2 sinh^2(s pi)) with, writing phi = pi - theta0,
        //   M(s) = phi sinh(2 theta0 s) - theta0 sinh(2 phi s)
        //        = 2 theta0 phi s^3 sum_{k>=1} (ua^k - ub^k) s^{2(k-1)} / (2k+1)!
        // for ua = (2 theta0)^2, ub = (2 phi)^2; the cancellation sits in
        // ua^k - ub^k and is exact term by term.
        let phi = PI - theta0;
        let ua = 4.0 * theta0 * theta0;
        let ub = 4.0 * phi * phi;
        let s2 = sa * sa;
        let mut pow_a = ua;
        let mut pow_b = ub;
        let mut fact = 6.0;
        let mut sum = 0.0;
        for k in 1..40 {
            let term = (pow_a - pow_b) / fact;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            pow_a *= ua * s2;
            pow_b *= ub * s2;
            let n = 2.0 * k as f64;
            fact *= (n + 2.0) * (n + 3.0);
        }
        let sh = (sa * PI).sinh();
        2.0 * theta0 * phi * sa * s2 * sum / (2.0 * sh * sh)
    } else {
        let c2 = 2.0 * (PI - 2.0 * theta0);
        let d2 = 2.0 * PI;
        let ec = em1(c2 * sa);
        let ed = em1(d2 * sa);
        let g = ec / ed;
        let gp = (c2 * (-c2 * sa).exp() * ed - d2 * ec * (-d2 * sa).exp()) / (ed * ed);
        0.5 * (-2.0 * theta0 * sa).exp() * (-2.0 * theta0 * g + gp)
    };
    if s < 0.0 {
        -dv
    } else {
        dv
    }
}

/// Gap to the spectral bound: b - eta(s), to full relative accuracy.
///
/// The direct difference is O(s^2) below two values of size b, so near the
/// origin it loses all relative accuracy; there the gap is evaluated as
///   [A sinh(s B) - B sinh(s A)] / (2 B sinh(s B)),  A = pi - 2 theta0, B = pi,
/// with the numerator expanded so the cancellation is exact term by term.
pub fn eta_gap(theta0: f64, s: f64) -> f64 {
    let sa = s.abs();
    if sa >= SERIES_SWITCH {
        return spectral_bound(theta0) - eta(theta0, sa);
    }
    if sa == 0.0 {
        return 0.0;
    }
    let a = PI - 2.0 * theta0;
    let a2 = a * a;
    let b2 = PI * PI;
    let s2 = sa * sa;
    // Numerator over (A B s^3): sum_{k>=1} (B^{2k} - A^{2k}) s^{2(k-1)} / (2k+1)!.
    let mut pow_a = a2;
    let mut pow_b = b2;
    let mut fact = 6.0;
    let mut sum = 0.0;
    for k in 1..40 {
        let term = (pow_b - pow_a) / fact;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        pow_a *= a2 * s2;
        pow_b *= b2 * s2;
        let n = 2.0 * k as f64;
        fact *= (n + 2.0) * (n + 3.0);
    }
    a * s2 * sa * sum / (2.0 * (sa * PI).sinh())
}

/// Inverse of the edge gap: the unique s >= 0 with b - eta(s) = gap.
///
/// Taking the gap directly, rather than the threshold t = b - gap, keeps full
/// relative accuracy for thresholds within rounding distance of the band
/// edge, where forming t first would destroy the information.
pub fn eta_inverse_gap(theta0: f64, gap: f64) -> Result<f64> {
    let b = spectral_bound(theta0);
    if gap == 0.0 {
        return Ok(0.0);
    }
    if !(gap > 0.0) || gap >= b {
        return Err(Error::SpectralParamRange { t: b - gap, b });
    }
    if gap > 0.5 * b {
        // Far from the edge the t-space inverse is well conditioned.
        return eta_inverse(theta0, b - gap);
    }
    let k = eta_curvature(theta0);
    let s0 = (gap / (b * k)).sqrt();
    if gap < 1e-20 * b {
        // The quartic correction is below measurable size.
        return Ok(s0);
    }
    let mut s = s0;
    for _ in 0..60 {
        let r = eta_gap(theta0, s) - gap;
        let d = -eta_prime(theta0, s);
        let mut next = s - r / d;
        if !(next > 0.0) {
            next = 0.5 * s;
        }
        let done = (next - s).abs() <= 1e-15 * next;
        s = next;
        if done {
            break;
        }
    }
    Ok(s)
}

/// Cap beyond which eta is inverted through its exponential tail.
fn inversion_cap(theta0: f64) -> f64 {
    60.0 / theta0
}

/// Inverse of eta on (0, b]: returns the unique s >= 0 with eta(s) = t.
///
/// Bracketed bisection narrows the root, Newton polishes it; far in the tail
/// the exponential asymptote seeds the iteration directly.
pub fn eta_inverse(theta0: f64, t: f64) -> Result<f64> {
    let b = spectral_bound(theta0);
    if !(t > 0.0) || t > b * (1.0 + 1e-12) {
        return Err(Error::SpectralParamRange { t, b });
    }
    if t >= b {
        return Ok(0.0);
    }
    let cap = inversion_cap(theta0);
    let ln_t = t.ln();
    // Relative residual in log form: stays O(1)-scaled across 300 decades of t.
    let g = |s: f64| {
        let v = eta(theta0, s);
        if v > 0.0 {
            v.ln() - ln_t
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut lo;
    let mut hi;
    let mut s;
    if t < eta(theta0, cap) {
        // Tail regime: eta(s) ~ (1/2) e^{-2 theta0 s} seeds Newton directly.
        s = (1.0 / (2.0 * t)).ln() / (2.0 * theta0);
        lo = 0.5 * s;
        hi = (2.0 * s).min(706.0 / (2.0 * theta0));
    } else {
        lo = 0.0;
        hi = cap;
        s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gm = g(s);
            if gm.abs() < 0.5 || (eta(theta0, s) - t).abs() < 1e-3 * b {
                break;
            }
            if gm > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            s = 0.5 * (lo + hi);
        }
    }
    for _ in 0..100 {
        let gv = g(s);
        if gv > 0.0 {
            lo = lo.max(s);
        } else if gv < 0.0 {
            hi = hi.min(s);
        }
        if gv.abs() <= 1e-14 {
            break;
        }
        let ev = eta(theta0, s);
        let dp = eta_prime(theta0, s);
        let dg = dp / ev;
        let mut next = if gv.is_finite() && dg != 0.0 { s - gv / dg } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() < 1e-16 * (1.0 + s) {
            s = next;
            break;
        }
        s = next;
    }
    Ok(s.max(0.0))
}
