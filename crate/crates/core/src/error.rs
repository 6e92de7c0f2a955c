use thiserror::Error;

/// Errors shared across the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The conformal map is singular at the strip origin (image at infinity).
    #[error("point maps to infinity (strip coordinate zeta = 0)")]
    PointAtInfinity,

    /// Branch cut of the strip coordinate: the open segment (-alpha, alpha) on the x1 axis.
    #[error("point lies on the branch cut segment of the strip map")]
    BranchCut,

    /// The two circles meet at (+-alpha, 0); the strip coordinate diverges there.
    #[error("point coincides with a corner of the domain")]
    Corner,

    #[error("scale factor degenerates at (xi, theta) = (0, 0)")]
    DegenerateScaleFactor,

    #[error("point does not lie on the requested boundary arc (deviation {deviation:.3e})")]
    OffBoundary { deviation: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("spectral parameter t = {t:.6e} outside [-b, b] with b = {b:.6e}")]
    SpectralParamRange { t: f64, b: f64 },

    #[error("p2 has a non-removable pole at s = 0")]
    PoleAtZero,

    #[error("density is not mean-zero (relative mean {relative_mean:.3e})")]
    NotMeanZero { relative_mean: f64 },

    #[error("opening angle {theta0:.6} below oracle floor {floor:.6}")]
    ThetaFloor { theta0: f64, floor: f64 },

    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("quadrature failed to converge (estimated error {estimated:.3e}, target {target:.3e})")]
    QuadratureNoConvergence { estimated: f64, target: f64 },

    #[error("invalid resonance query: {0}")]
    InvalidQuery(String),

    #[error("delta sweep must contain at least 6 values spanning 3 decades")]
    InsufficientDecades,

    #[error("{0}")]
    Domain(String),
}
