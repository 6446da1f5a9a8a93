//! Laplace fundamental-solution kernels and the panel quadrature rules the
//! collocation solvers need: plain Gauss–Legendre for well-separated pairs,
//! adaptive bisection for near-singular ones, and an analytic log-moment
//! splitting for the on-panel logarithmic singularity.

use crate::geometry::{BoundaryCurve, Panel, Point, Vec2};
use crate::linalg::LuFactors;
use nalgebra::DMatrix;
use once_cell::sync::Lazy;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel evaluated at coincident source and target ({}, {})", .0.x, .0.y)]
    Coincident(Point),
}

/// Φ(x,y) = −log|x−y| / 2π.
pub fn phi(x: &Point, y: &Point) -> Result<f64, KernelError> {
    let r2 = (x - y).norm_squared();
    if r2 == 0.0 {
        return Err(KernelError::Coincident(*x));
    }
    Ok(-r2.ln() / (4.0 * PI))
}

/// ∂Φ/∂ν(x) = −(x−y)·ν(x) / (2π|x−y|²).
pub fn dphi_dnu(x: &Point, y: &Point, nu_x: &Vec2) -> Result<f64, KernelError> {
    let d = x - y;
    let r2 = d.norm_squared();
    if r2 == 0.0 {
        return Err(KernelError::Coincident(*x));
    }
    Ok(-d.dot(nu_x) / (2.0 * PI * r2))
}

pub(crate) fn phi_raw(x: &Point, y: &Point) -> f64 {
    -(x - y).norm_squared().ln() / (4.0 * PI)
}

/// For integrable singularities, a quadrature abscissa that rounds exactly
/// onto the singular point is a measure-zero sample; dropping it keeps the
/// adaptive rule convergent instead of propagating ±inf.
pub(crate) fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() { v } else { 0.0 }
}

pub(crate) fn dphi_dnu_raw(x: &Point, y: &Point, nu_x: &Vec2) -> f64 {
    let d = x - y;
    -d.dot(nu_x) / (2.0 * PI * d.norm_squared())
}

/// A kernel value together with a near-singularity flag for the caller's
/// quadrature dispatch.
#[derive(Clone, Copy, Debug)]
pub struct KernelEval {
    pub value: f64,
    pub is_singular: bool,
}

pub fn eval_single_layer(x: &Point, y: &Point, cutoff: f64) -> Result<KernelEval, KernelError> {
    Ok(KernelEval { value: phi(x, y)?, is_singular: (x - y).norm() < cutoff })
}

pub fn eval_double_layer(
    x: &Point,
    y: &Point,
    nu_x: &Vec2,
    cutoff: f64,
) -> Result<KernelEval, KernelError> {
    Ok(KernelEval { value: dphi_dnu(x, y, nu_x)?, is_singular: (x - y).norm() < cutoff })
}

/// Lagrange basis over the three panel nodes, as a function of the parameter.
pub fn lagrange3(thetas: &[f64; 3], j: usize, theta: f64) -> f64 {
    let mut v = 1.0;
    for m in 0..3 {
        if m != j {
            v *= (theta - thetas[m]) / (thetas[j] - thetas[m]);
        }
    }
    v
}

/// Gauss–Legendre rule on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: &F) -> f64 {
        let c = 0.5 * (a + b);
        let s = 0.5 * (b - a);
        let sum: f64 =
            self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(c + s * x)).sum();
        s * sum
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> GaussRule {
    assert!(n >= 2, "rules below 2 points are not used");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // initial guesses run from +1 down to −1, flip to ascending
    nodes.reverse();
    weights.reverse();
    GaussRule { nodes, weights }
}

static GL15: Lazy<GaussRule> = Lazy::new(|| gauss_legendre(15));
static GL24: Lazy<GaussRule> = Lazy::new(|| gauss_legendre(24));

pub fn gl15() -> &'static GaussRule {
    &GL15
}

pub fn gl24() -> &'static GaussRule {
    &GL24
}

/// One refinement-queue entry: a subinterval with its bisected Gauss
/// estimates and the error estimate that ranks it.
struct QuadPiece {
    err: f64,
    a: f64,
    m: f64,
    b: f64,
    fine_l: f64,
    fine_r: f64,
}

impl QuadPiece {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, coarse: f64) -> Self {
        let m = 0.5 * (a + b);
        let fine_l = gl15().integrate(a, m, f);
        let fine_r = gl15().integrate(m, b, f);
        QuadPiece { err: (fine_l + fine_r - coarse).abs(), a, m, b, fine_l, fine_r }
    }

    fn fine(&self) -> f64 {
        self.fine_l + self.fine_r
    }
}

impl PartialEq for QuadPiece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for QuadPiece {}

impl PartialOrd for QuadPiece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadPiece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Kernel evaluations suffer catastrophic cancellation in x − y when the
/// target sits within ~1e−6 of the source curve; below that floor local
/// error estimates stall above any fixed fraction of a halving tolerance,
/// so refinement must be globally bounded rather than depth-bounded.
const QUAD_MAX_SPLITS: usize = 2000;

/// Adaptive bisection quadrature on [a, b] with absolute tolerance.
///
/// Refinement is global-greedy: the subinterval with the largest bisection
/// error estimate splits first, so work concentrates where the error lives
/// and the budget caps total cost once the estimates hit the integrand's
/// roundoff floor.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let root = QuadPiece::new(f, a, b, gl15().integrate(a, b, f));
    let mut total = root.fine();
    let mut err_sum = root.err;
    let mut queue = std::collections::BinaryHeap::new();
    queue.push(root);
    let mut splits = 0;
    while err_sum > tol && splits < QUAD_MAX_SPLITS {
        let Some(piece) = queue.pop() else { break };
        err_sum -= piece.err;
        // a midpoint that rounds onto an endpoint cannot split; freeze the
        // piece at its current estimate
        if piece.m <= piece.a || piece.m >= piece.b {
            continue;
        }
        let left = QuadPiece::new(f, piece.a, piece.m, piece.fine_l);
        let right = QuadPiece::new(f, piece.m, piece.b, piece.fine_r);
        total += left.fine() + right.fine() - piece.fine();
        err_sum += left.err + right.err;
        queue.push(left);
        queue.push(right);
        splits += 1;
    }
    total
}

/// Near-singular panel integral of `integrand(θ)` dθ over [a, b] with an
/// automatically scaled tolerance.
///
/// A non-finite coarse estimate (a quadrature node landed exactly on the
/// singularity) falls back to an absolute tolerance; refinement then splits
/// the offending node onto a subinterval endpoint, where the open rule
/// never samples it again.
pub fn adaptive_panel_integral<F: Fn(f64) -> f64>(integrand: &F, a: f64, b: f64) -> f64 {
    let coarse = gl15().integrate(a, b, integrand);
    let scale = if coarse.is_finite() { coarse.abs() } else { 0.0 };
    adaptive_quad(integrand, a, b, 1e-12 * (1.0 + scale))
}

const CHEB_N: usize = 13;

struct ChebFit {
    nodes: [f64; CHEB_N],
    vandermonde: LuFactors,
}

static CHEB: Lazy<ChebFit> = Lazy::new(|| {
    let mut nodes = [0.0; CHEB_N];
    for (i, node) in nodes.iter_mut().enumerate() {
        *node = ((2 * i + 1) as f64 * PI / (2 * CHEB_N) as f64).cos();
    }
    let v = DMatrix::from_fn(CHEB_N, CHEB_N, |i, k| nodes[i].powi(k as i32));
    let vandermonde = LuFactors::factor(v).expect("Chebyshev Vandermonde matrix is nonsingular");
    ChebFit { nodes, vandermonde }
});

/// Monomial coefficients of the degree-12 interpolant of g at Chebyshev nodes.
fn monomial_fit<F: Fn(f64) -> f64>(g: &F) -> [f64; CHEB_N] {
    let fit = &*CHEB;
    let mut c = [0.0; CHEB_N];
    for (ci, s) in c.iter_mut().zip(fit.nodes.iter()) {
        *ci = g(*s);
    }
    fit.vandermonde.solve_in_place(&mut c);
    c
}

/// M_k(t) = ∫_{−1}^{1} s^k log|s−t| ds for |t| < 1, by integration by parts
/// against the principal-value moments P_m(t) = ∫ s^m/(s−t) ds.
fn log_moments(t: f64) -> [f64; CHEB_N] {
    debug_assert!(t.abs() < 1.0);
    let l1 = (1.0 - t).ln();
    let l2 = (1.0 + t).ln();
    let mut p = [0.0; CHEB_N + 1];
    p[0] = l1 - l2;
    for m in 1..=CHEB_N {
        let poly = if m % 2 == 1 { 2.0 / m as f64 } else { 0.0 };
        p[m] = poly + t * p[m - 1];
    }
    let mut out = [0.0; CHEB_N];
    for (k, mk) in out.iter_mut().enumerate() {
        let kk = (k + 1) as f64;
        let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        *mk = (l1 - sign * l2) / kk - p[k + 1] / kk;
    }
    out
}

/// Where the evaluation point sits relative to the integration panel.
pub enum PanelTarget {
    /// Collocation node on this very panel (parameter value).
    OnPanel { theta: f64 },
    /// Off-panel point within the near-singular cutoff.
    Near { point: Point },
}

/// ∫_panel Φ(target, x(θ)) · density(θ) · ‖x′(θ)‖ dθ.
///
/// On-panel targets get the log-splitting rule: the smooth factor
/// −log(r/|θ−θ_t|)/2π by split Gauss–Legendre, the log|θ−θ_t| factor by a
/// Chebyshev fit of density×jacobian against analytic log moments.
pub fn singular_panel_integral<F: Fn(f64) -> f64>(
    curve: &BoundaryCurve,
    panel: &Panel,
    target: &PanelTarget,
    density: F,
) -> f64 {
    match target {
        PanelTarget::Near { point } => {
            let f = |theta: f64| {
                finite_or_zero(phi_raw(point, &curve.point(theta)))
                    * density(theta)
                    * curve.jacobian(theta)
            };
            adaptive_panel_integral(&f, panel.a, panel.b)
        }
        PanelTarget::OnPanel { theta: theta_t } => {
            let theta_t = *theta_t;
            debug_assert!(panel.a < theta_t && theta_t < panel.b);
            let x_t = curve.point(theta_t);
            let smooth = |theta: f64| {
                let r = (x_t - curve.point(theta)).norm();
                (r / (theta - theta_t).abs()).ln() * density(theta) * curve.jacobian(theta)
            };
            let i_smooth = gl24().integrate(panel.a, theta_t, &smooth)
                + gl24().integrate(theta_t, panel.b, &smooth);

            let c = 0.5 * (panel.a + panel.b);
            let half = 0.5 * (panel.b - panel.a);
            let g = |s: f64| {
                let theta = c + half * s;
                density(theta) * curve.jacobian(theta)
            };
            let coeffs = monomial_fit(&g);
            let moments = log_moments((theta_t - c) / half);
            let log_half = half.ln();
            let mut i_log = 0.0;
            for (k, ck) in coeffs.iter().enumerate() {
                // ∫ s^k ds = 2/(k+1) for even k folds the log(h/2) shift in
                let shift = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
                i_log += ck * (moments[k] + log_half * shift);
            }
            i_log *= half;
            -(i_smooth + i_log) / (2.0 * PI)
        }
    }
}

/// ∫_panel ∂Φ/∂ν(x_t)(x_t, x(θ)) · density(θ) · ‖x′(θ)‖ dθ for a collocation
/// node on the panel itself. The singularity is removable on a C² panel;
/// split Gauss–Legendre never samples the node.
pub fn dlp_self_panel_integral<F: Fn(f64) -> f64>(
    curve: &BoundaryCurve,
    panel: &Panel,
    theta_t: f64,
    density: F,
) -> f64 {
    debug_assert!(panel.a < theta_t && theta_t < panel.b);
    let x_t = curve.point(theta_t);
    let nu_t = curve.unit_normal(theta_t);
    let f = |theta: f64| {
        dphi_dnu_raw(&x_t, &curve.point(theta), &nu_t) * density(theta) * curve.jacobian(theta)
    };
    gl24().integrate(panel.a, theta_t, &f) + gl24().integrate(theta_t, panel.b, &f)
}
