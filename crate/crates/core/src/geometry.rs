//! Two equal disks of radius a whose boundary circles intersect at (+-alpha, 0)
//! under half opening angle theta0, together with the conformal map that sends
//! the exterior of the union onto an infinite strip.
//!
//! The strip coordinate is zeta = xi + i theta = Log((z + alpha)/(z - alpha)),
//! inverted by z = alpha (e^zeta + 1)/(e^zeta - 1).  The two boundary arcs sit
//! on the horizontal lines theta = +-theta0: the lower arc (on the circle
//! centered below the x1 axis) corresponds to theta = +theta0 and is labeled
//! `Side::Plus`.

use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Point in the physical plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub x1: f64,
    pub x2: f64,
}

impl PlanePoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        PlanePoint { x1, x2 }
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.x1, self.x2)
    }

    pub fn dist(self, other: PlanePoint) -> f64 {
        ((self.x1 - other.x1).powi(2) + (self.x2 - other.x2).powi(2)).sqrt()
    }
}

impl From<Complex64> for PlanePoint {
    fn from(z: Complex64) -> Self {
        PlanePoint { x1: z.re, x2: z.im }
    }
}

/// Point in the strip, with theta normalized to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPoint {
    pub xi: f64,
    pub theta: f64,
}

impl StripPoint {
    pub fn new(xi: f64, theta: f64) -> Self {
        let mut t = theta.rem_euclid(2.0 * PI);
        if t > PI {
            t -= 2.0 * PI;
        }
        StripPoint { xi, theta: t }
    }
}

/// Which boundary arc: `Plus` is theta = +theta0 (the lower arc), `Minus` is
/// theta = -theta0 (the upper arc).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    a: f64,
    theta0: f64,
    alpha: f64,
}

impl Geometry {
    /// Disk radius `a > 0` and half opening angle `theta0 in (0, pi/2)`.
    pub fn new(a: f64, theta0: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidGeometry(format!("radius must be positive, got {a}")));
        }
        if !(theta0 > 0.0 && theta0 < PI / 2.0) {
            return Err(Error::InvalidGeometry(format!(
                "opening angle must lie in (0, pi/2), got {theta0}"
            )));
        }
        Ok(Geometry { a, theta0, alpha: a * theta0.sin() })
    }

    pub fn radius(&self) -> f64 {
        self.a
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Half-distance between the intersection corners (+-alpha, 0).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Essential spectrum half-width b = 1/2 - theta0/pi.
    pub fn spectral_bound(&self) -> f64 {
        crate::multipliers::spectral_bound(self.theta0)
    }

    /// Center of the circle carrying the given arc.  The Plus arc is the lower
    /// one, owned by the circle centered below the x1 axis.
    pub fn center(&self, side: Side) -> PlanePoint {
        let c = self.a * self.theta0.cos();
        match side {
            Side::Plus => PlanePoint::new(0.0, -c),
            Side::Minus => PlanePoint::new(0.0, c),
        }
    }

    pub fn corners(&self) -> [PlanePoint; 2] {
        [PlanePoint::new(self.alpha, 0.0), PlanePoint::new(-self.alpha, 0.0)]
    }

    /// Total boundary length 4 a (pi - theta0); each arc contributes half.
    pub fn boundary_length(&self) -> f64 {
        4.0 * self.a * (PI - self.theta0)
    }

    /// Strip-to-plane map z = alpha (e^zeta + 1)/(e^zeta - 1).
    pub fn map_to_plane(&self, p: StripPoint) -> Result<PlanePoint> {
        let zeta = Complex64::new(p.xi, p.theta);
        let e = zeta.exp();
        let denom = e - 1.0;
        if denom.norm() == 0.0 {
            return Err(Error::PointAtInfinity);
        }
        Ok(PlanePoint::from(self.alpha * (e + 1.0) / denom))
    }

    /// Plane-to-strip map zeta = Log((z + alpha)/(z - alpha)), principal branch.
    ///
    /// The corners and the open segment between them are excluded: the map has
    /// its branch cut there.
    pub fn map_to_strip(&self, z: PlanePoint) -> Result<StripPoint> {
        if z.x2 == 0.0 {
            if z.x1.abs() == self.alpha {
                return Err(Error::Corner);
            }
            if z.x1.abs() < self.alpha {
                return Err(Error::BranchCut);
            }
        }
        let zc = z.as_complex();
        let lambda = (zc + self.alpha) / (zc - self.alpha);
        let zeta = lambda.ln();
        Ok(StripPoint { xi: zeta.re, theta: zeta.im })
    }

    /// Derivative of the plane-to-strip map: zeta'(z) = -2 alpha / (z^2 - alpha^2).
    pub fn strip_derivative(&self, z: PlanePoint) -> Result<Complex64> {
        let zc = z.as_complex();
        let denom = zc * zc - self.alpha * self.alpha;
        if denom.norm() == 0.0 {
            return Err(Error::Corner);
        }
        Ok(-2.0 * self.alpha / denom)
    }

    /// Conformal scale factor h = (cosh xi - cos theta)/alpha = |zeta'(z)|.
    pub fn scale_factor(&self, p: StripPoint) -> Result<f64> {
        let v = (p.xi.cosh() - p.theta.cos()) / self.alpha;
        if v == 0.0 {
            return Err(Error::DegenerateScaleFactor);
        }
        Ok(v)
    }

    /// Scale factor on the boundary lines theta = +-theta0 (side independent).
    pub fn boundary_scale(&self, xi: f64) -> f64 {
        (xi.cosh() - self.theta0.cos()) / self.alpha
    }

    /// Arc length element per unit xi on the boundary: 1/h(xi, theta0).
    pub fn arc_element(&self, xi: f64) -> f64 {
        1.0 / self.boundary_scale(xi)
    }

    /// Boundary point at strip coordinate (xi, +-theta0).
    pub fn boundary_point(&self, xi: f64, side: Side) -> PlanePoint {
        // Inline the strip map; theta = +-theta0 never hits the singularity.
        self.map_to_plane(StripPoint::new(xi, side.sign() * self.theta0))
            .expect("boundary line avoids zeta = 0")
    }

    /// Outward unit normal of the union at a point of the given arc.
    pub fn outward_normal(&self, x: PlanePoint, side: Side) -> Result<[f64; 2]> {
        let c = self.center(side);
        let d = x.dist(c);
        let deviation = (d - self.a).abs();
        if deviation > 1e-8 * self.a {
            return Err(Error::OffBoundary { deviation });
        }
        // Points away from the owning center: downward on the lower arc.
        Ok([(x.x1 - c.x1) / d, (x.x2 - c.x2) / d])
    }

    /// True when z lies strictly outside the closed union of the two disks.
    pub fn is_exterior(&self, z: PlanePoint) -> bool {
        z.dist(self.center(Side::Plus)) > self.a && z.dist(self.center(Side::Minus)) > self.a
    }
}
