//! Small numerical utilities: Gauss rules, adaptive quadrature, fits.

use crate::{Error, Result};

/// 15-point Kronrod abscissae (positive half, descending), embedding 7-point Gauss.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 panel. Returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    (res_k * h, ((res_k - res_g) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
}

struct Worker<'a, F> {
    f: &'a F,
    value: f64,
    error: f64,
    max_depth: usize,
    /// Remaining panel allowance.  A pointwise-noisy integrand freezes the
    /// ratio of panel error to the per-level tolerance, so without a budget
    /// the refinement degenerates into an exponentially wide tree; exhausting
    /// the budget accepts what is left and lets the final error check decide.
    budget: usize,
}

impl<F: Fn(f64) -> f64> Worker<'_, F> {
    fn run(&mut self, a: f64, b: f64, tol: f64, depth: usize) {
        let (v, e) = gk15(self.f, a, b);
        self.budget = self.budget.saturating_sub(1);
        if e <= tol
            || e <= 50.0 * f64::EPSILON * v.abs()
            || self.budget == 0
            || depth >= self.max_depth
            || (b - a) < 1e-15 * (a.abs() + b.abs() + 1.0)
        {
            self.value += v;
            self.error += e;
        } else {
            let c = 0.5 * (a + b);
            self.run(a, c, 0.5 * tol, depth + 1);
            self.run(c, b, 0.5 * tol, depth + 1);
        }
    }
}

/// Adaptive quadrature over [a, b] to the requested tolerances.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<QuadResult> {
    adaptive_quad_pts(f, &[a, b], rel_tol, abs_tol)
}

/// Adaptive quadrature over consecutive segments given by `pts` (sorted).
///
/// Breakpoints let the caller pre-split around known peaks or kinks so the
/// bisection strategy locks on quickly.
pub fn adaptive_quad_pts<F: Fn(f64) -> f64>(f: F, pts: &[f64], rel_tol: f64, abs_tol: f64) -> Result<QuadResult> {
    assert!(pts.len() >= 2, "need at least one segment");
    // First pass estimates the scale so per-segment tolerances can be absolute.
    let mut rough = 0.0;
    for w in pts.windows(2) {
        let (v, _) = gk15(&f, w[0], w[1]);
        rough += v.abs();
    }
    let target = (rel_tol * rough).max(abs_tol);
    let nseg = pts.len() - 1;
    let mut worker = Worker { f: &f, value: 0.0, error: 0.0, max_depth: 60, budget: 200_000 };
    for w in pts.windows(2) {
        worker.run(w[0], w[1], 0.1 * target / nseg as f64, 0);
    }
    let tol_final = (rel_tol * worker.value.abs()).max(abs_tol);
    if worker.error > tol_final {
        return Err(Error::QuadratureNoConvergence { estimated: worker.error, target: tol_final });
    }
    Ok(QuadResult { value: worker.value, abs_error: worker.error })
}

/// Gauss-Legendre nodes and weights on (-1, 1), by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi-style initial guess, then Newton on the recurrence.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// (P_n(x), P_n'(x)) via the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Least-squares line fit; returns (slope, intercept).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Aitken extrapolation of a geometrically converging tail; falls back to the
/// last entry when the increments no longer behave.
pub fn aitken_limit(ys: &[f64]) -> f64 {
    assert!(!ys.is_empty());
    if ys.len() < 3 {
        return *ys.last().unwrap();
    }
    let n = ys.len();
    let (y0, y1, y2) = (ys[n - 3], ys[n - 2], ys[n - 1]);
    let d1 = y1 - y0;
    let d2 = y2 - y1;
    let dd = d2 - d1;
    if dd.abs() < 1e-13 * (y2.abs() + 1e-300) {
        return y2;
    }
    let candidate = y2 - d2 * d2 / dd;
    // Reject wild extrapolations from non-geometric tails.
    if (candidate - y2).abs() > 0.5 * y2.abs() {
        return y2;
    }
    candidate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_low_orders() {
        let (x, w) = gauss_legendre(2);
        assert!((x[0] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);

        let (x, w) = gauss_legendre(5);
        // Reference values for n = 5.
        let xr = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        let wr = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        for i in 0..5 {
            assert!((x[i] - xr[i]).abs() < 1e-13);
            assert!((w[i] - wr[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        // Degree 11 is exact for n = 6.
        let val: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((val - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_quad_smooth() {
        let r = adaptive_quad(|x| x * x, 0.0, 1.0, 1e-12, 1e-300).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-13);

        let r = adaptive_quad(|x| (-0.5 * x * x).exp(), -8.0, 8.0, 1e-12, 1e-300).unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn adaptive_quad_log_endpoint() {
        let r = adaptive_quad(|x| x.ln(), 1e-300, 1.0, 1e-9, 1e-12).unwrap();
        assert!((r.value + 1.0).abs() < 1e-8, "got {}", r.value);
    }

    #[test]
    fn adaptive_quad_with_breakpoints_hits_narrow_peak() {
        // Lorentzian of width 1e-6 centered at 0.3.
        let d = 1e-6;
        let f = |x: f64| d / ((x - 0.3) * (x - 0.3) + d * d);
        let pts = [0.0, 0.3 - 1e-3, 0.3 - 1e-6, 0.3, 0.3 + 1e-6, 0.3 + 1e-3, 1.0];
        let r = adaptive_quad_pts(f, &pts, 1e-10, 1e-300).unwrap();
        let exact = ((1.0 - 0.3) / d).atan() + (0.3 / d).atan();
        assert!((r.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn unresolvable_noise_errors_out_quickly() {
        // Oscillations far below panel width look like noise to the error
        // estimator; the panel budget must turn the blowup into a clean
        // error in bounded time instead of an endless refinement.
        let start = std::time::Instant::now();
        let r = adaptive_quad(|x: f64| 1.0 + 1e-3 * (1e9 * x).sin(), 0.0, 1.0, 1e-12, 0.0);
        assert!(r.is_err());
        assert!(start.elapsed().as_secs() < 30);
    }

    #[test]
    fn fit_line_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [-2.0, 1.0, 4.0, 7.0];
        let (m, c) = fit_line(&xs, &ys);
        assert!((m - 3.0).abs() < 1e-14);
        assert!((c + 2.0).abs() < 1e-14);
    }

    #[test]
    fn aitken_geometric() {
        let ys: Vec<f64> = (0..8).map(|n| 1.0 + 0.5f64.powi(n)).collect();
        assert!((aitken_limit(&ys) - 1.0).abs() < 1e-12);
    }
}
