//! Numerical integration kernels.
//!
//! Two layers live here:
//!
//! * an adaptive 1-D integrator (`integrate_1d`, `integrate_to_infinity`)
//!   built from an embedded Gauss–Legendre pair: a 10-point low rule and a
//!   30-point high rule per interval, error estimated as their difference,
//!   worst interval bisected first. Known integrand kinks are supplied by the
//!   caller and become initial interval boundaries, so piecewise-smooth
//!   integrands converge at the smooth rate;
//! * the characteristic-grid machinery for the 2-D cumulative solution
//!   formula: `CharGrid` (u-nodes with mirrored v-nodes) and
//!   `cumulative_triangle`, which evaluates
//!
//!   ```text
//!     ψ(u,v) = (1/4) ∫_{|v|}^{u} ∫_{-u'}^{v} H(u',v') dv' du'
//!   ```
//!
//!   at every grid node in O(N_u · N_v) by nested cumulative trapezoid
//!   sums (composite trapezoid in both directions; order 2). Mirroring the
//!   v-nodes from the u-nodes makes every inner lower limit -u' and every
//!   outer lower limit |v| land exactly on a node, so no partially covered
//!   cells ever arise.
//!
//! Everything is f64; budgets are hard errors, not silent truncation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use ndarray::{Array2, Axis, Zip};
use thiserror::Error;

/// Default cap on integrand evaluations for one adaptive integral.
pub const DEFAULT_EVAL_BUDGET: usize = 1_000_000;

/// Successful adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Conservative absolute error estimate; ≤ the requested tolerance.
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Error)]
pub enum QuadError {
    #[error("evaluation budget {budget} exhausted: best estimate {value} ± {error_estimate}")]
    BudgetExhausted {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
        budget: usize,
    },
    #[error("tolerance {tol} unreachable at machine precision: best estimate {value} ± {error_estimate}")]
    ToleranceUnreachable {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
        tol: f64,
    },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("invalid request: {msg}")]
    BadRequest { msg: String },
}

// ---------------------------------------------------------------------------
// Gauss–Legendre rules
// ---------------------------------------------------------------------------

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
///
/// Newton iteration on the three-term recurrence; initial guesses from the
/// Chebyshev approximation. Machine-precision for the orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn rule_pair() -> &'static ((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>)) {
    static PAIR: OnceLock<((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>))> = OnceLock::new();
    PAIR.get_or_init(|| (gauss_legendre(10), gauss_legendre(30)))
}

/// One pending interval in the adaptive scheme, ordered by error estimate.
struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(self.a.total_cmp(&other.a))
    }
}

fn eval_interval<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Interval, QuadError> {
    let ((xl, wl), (xh, wh)) = rule_pair();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut lo = 0.0;
    for (&x, &w) in xl.iter().zip(wl) {
        let t = mid + half * x;
        let y = f(t);
        if !y.is_finite() {
            return Err(QuadError::NonFiniteIntegrand { x: t });
        }
        lo += w * y;
    }
    let mut hi = 0.0;
    for (&x, &w) in xh.iter().zip(wh) {
        let t = mid + half * x;
        let y = f(t);
        if !y.is_finite() {
            return Err(QuadError::NonFiniteIntegrand { x: t });
        }
        hi += w * y;
    }
    lo *= half;
    hi *= half;
    Ok(Interval {
        a,
        b,
        value: hi,
        error: (hi - lo).abs(),
    })
}

/// Adaptive integral of `f` over [a, b] to absolute tolerance `tol`.
///
/// `kinks` lists abscissae where `f` or a derivative may jump; interior ones
/// become initial subdivision points. A reversed range integrates with the
/// conventional sign flip. Fails rather than returning an estimate outside
/// tolerance; see [`QuadError`].
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    kinks: &[f64],
) -> Result<QuadResult, QuadError> {
    integrate_1d_with_budget(f, a, b, tol, kinks, DEFAULT_EVAL_BUDGET)
}

/// [`integrate_1d`] with an explicit evaluation budget.
pub fn integrate_1d_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    kinks: &[f64],
    budget: usize,
) -> Result<QuadResult, QuadError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(QuadError::BadRequest {
            msg: format!("bounds must be finite (got [{a}, {b}])"),
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(QuadError::BadRequest {
            msg: format!("tolerance must be positive and finite (got {tol})"),
        });
    }
    if a == b {
        let y = f(a);
        if !y.is_finite() {
            return Err(QuadError::NonFiniteIntegrand { x: a });
        }
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 1,
        });
    }
    if a > b {
        let r = integrate_1d_with_budget(f, b, a, tol, kinks, budget)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }

    // Initial partition: [a, b] split at interior kinks.
    let mut cuts: Vec<f64> = kinks.iter().copied().filter(|&k| k > a && k < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(a);
    bounds.extend(cuts);
    bounds.push(b);

    let per_eval = {
        let ((xl, _), (xh, _)) = rule_pair();
        xl.len() + xh.len()
    };
    let mut evals = 0usize;
    let mut heap = BinaryHeap::new();
    let mut total_error = 0.0;

    for pair in bounds.windows(2) {
        let it = eval_interval(&f, pair[0], pair[1])?;
        total_error += it.error;
        evals += per_eval;
        heap.push(it);
    }

    // Exact sums over the current partition, left to right (the running
    // `total_error` is only a termination heuristic and may drift).
    let settle = |heap: BinaryHeap<Interval>| {
        let mut items = heap.into_vec();
        items.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value = items.iter().map(|i| i.value).sum::<f64>();
        let error = items.iter().map(|i| i.error).sum::<f64>();
        (value, error)
    };

    // Global strategy: bisect the worst interval until the summed error
    // estimate meets the tolerance.
    while total_error > tol {
        let worst = heap.pop().expect("error positive implies intervals exist");
        let mid = 0.5 * (worst.a + worst.b);
        // Unsplittable at machine precision: the request cannot be met.
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (value, error_estimate) = settle(heap);
            return Err(QuadError::ToleranceUnreachable {
                value,
                error_estimate,
                evaluations: evals,
                tol,
            });
        }
        if evals + 2 * per_eval > budget {
            heap.push(worst);
            let (value, error_estimate) = settle(heap);
            return Err(QuadError::BudgetExhausted {
                value,
                error_estimate,
                evaluations: evals,
                budget,
            });
        }
        let left = eval_interval(&f, worst.a, mid)?;
        let right = eval_interval(&f, mid, worst.b)?;
        evals += 2 * per_eval;
        total_error += left.error + right.error - worst.error;
        total_error = total_error.max(0.0);
        heap.push(left);
        heap.push(right);
    }

    let (value, error_estimate) = settle(heap);
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations: evals,
    })
}

/// Adaptive integral of `f` over [a, ∞), mapped to [0, 1) by
/// `x = a + s/(1-s)`.
///
/// Effective when `f` decays at least like `x^{-2}`; slower tails concentrate
/// unresolvable mass next to s = 1 (the map's Jacobian is (1-s)^{-2}) and end
/// in `ToleranceUnreachable`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
    kinks: &[f64],
) -> Result<QuadResult, QuadError> {
    if !a.is_finite() {
        return Err(QuadError::BadRequest {
            msg: format!("lower bound must be finite (got {a})"),
        });
    }
    let mapped_kinks: Vec<f64> = kinks
        .iter()
        .filter(|&&k| k > a)
        .map(|&k| (k - a) / (1.0 + (k - a)))
        .collect();
    // Gauss nodes are interior, so s = 1 itself is never evaluated.
    integrate_1d(
        |s| {
            let om = 1.0 - s;
            f(a + s / om) / (om * om)
        },
        0.0,
        1.0,
        tol,
        &mapped_kinks,
    )
}

// ---------------------------------------------------------------------------
// Halton sampling
// ---------------------------------------------------------------------------

/// Default start offset for quasi-random sampling; reports echo the value
/// actually used.
pub const DEFAULT_SAMPLE_SEED: u64 = 1;

/// Radical-inverse (van der Corput) value of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while index > 0 {
        x += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    x
}

/// k-th point (k = 0, 1, …) of the Halton sequence offset by `seed`,
/// in the unit cube of dimension `bases.len()`.
pub fn halton_point(seed: u64, k: u64, bases: &[u64]) -> Vec<f64> {
    bases
        .iter()
        .map(|&b| radical_inverse(seed + k, b))
        .collect()
}

// ---------------------------------------------------------------------------
// Characteristic grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least two u-nodes (got {0})")]
    TooFewNodes(usize),
    #[error("u-nodes must start at 0 (got {0})")]
    MissingOrigin(f64),
    #[error("u-nodes must be finite and strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
    #[error("invalid grid parameter: {0}")]
    BadParameter(String),
}

/// Tensor grid on the characteristic triangle.
///
/// `v_nodes` is always the mirror image `{-u : u ∈ u_nodes} ∪ u_nodes` of the
/// u-nodes, so v = 0 is a mesh line and, for every u-node, ±u are v-nodes.
/// Tables indexed by this grid are rectangular with zeros outside |v| ≤ u.
#[derive(Debug, Clone, PartialEq)]
pub struct CharGrid {
    u_nodes: Vec<f64>,
    v_nodes: Vec<f64>,
}

impl CharGrid {
    /// Build from u-nodes; v-nodes are mirrored automatically.
    pub fn from_u_nodes(u_nodes: Vec<f64>) -> Result<Self, GridError> {
        if u_nodes.len() < 2 {
            return Err(GridError::TooFewNodes(u_nodes.len()));
        }
        if u_nodes[0] != 0.0 {
            return Err(GridError::MissingOrigin(u_nodes[0]));
        }
        for i in 1..u_nodes.len() {
            if !u_nodes[i].is_finite() || u_nodes[i] <= u_nodes[i - 1] {
                return Err(GridError::NotIncreasing(i));
            }
        }
        let mut v_nodes = Vec::with_capacity(2 * u_nodes.len() - 1);
        v_nodes.extend(u_nodes.iter().skip(1).rev().map(|&u| -u));
        v_nodes.extend(u_nodes.iter().copied());
        Ok(Self { u_nodes, v_nodes })
    }

    /// Uniform spacing `1/nodes_per_unit` up to `knee`, then geometric with
    /// the given ratio, capped exactly at `u_max`.
    pub fn with_resolution(
        u_max: f64,
        nodes_per_unit: u32,
        ratio: f64,
        knee: f64,
    ) -> Result<Self, GridError> {
        if !(u_max.is_finite() && u_max > 0.0) {
            return Err(GridError::BadParameter(format!("u_max = {u_max}")));
        }
        if nodes_per_unit == 0 {
            return Err(GridError::BadParameter("nodes_per_unit = 0".into()));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(GridError::BadParameter(format!("ratio = {ratio}")));
        }
        if !(knee.is_finite() && knee > 0.0) {
            return Err(GridError::BadParameter(format!("knee = {knee}")));
        }
        let h = 1.0 / nodes_per_unit as f64;
        let top = u_max.min(knee);
        // floor (with an epsilon for exact integer products) so the last
        // uniform node never overshoots `top`
        let n_uniform = (top * nodes_per_unit as f64 + 1e-9).floor() as usize;
        let mut u = Vec::with_capacity(n_uniform + 64);
        for i in 0..=n_uniform {
            u.push(i as f64 * h);
        }
        if *u.last().unwrap() < top {
            u.push(top);
        }
        if u_max > knee {
            let mut x = knee;
            loop {
                x *= ratio;
                if x >= u_max * (1.0 - 1e-12) {
                    break;
                }
                u.push(x);
            }
            u.push(u_max);
        }
        Self::from_u_nodes(u)
    }

    /// The solver's default mesh: u ∈ [0, u_max], 64 nodes per unit below
    /// u = 10, geometric (ratio 1.05) above.
    pub fn standard(u_max: f64) -> Result<Self, GridError> {
        Self::with_resolution(u_max, 64, 1.05, 10.0)
    }

    /// Same extent with spacing halved in both regimes (nodes per unit
    /// doubled, geometric ratio square-rooted).
    pub fn halved(u_max: f64, nodes_per_unit: u32, ratio: f64, knee: f64) -> Result<Self, GridError> {
        Self::with_resolution(u_max, nodes_per_unit * 2, ratio.sqrt(), knee)
    }

    #[inline]
    pub fn u_nodes(&self) -> &[f64] {
        &self.u_nodes
    }

    #[inline]
    pub fn v_nodes(&self) -> &[f64] {
        &self.v_nodes
    }

    #[inline]
    pub fn n_u(&self) -> usize {
        self.u_nodes.len()
    }

    #[inline]
    pub fn n_v(&self) -> usize {
        self.v_nodes.len()
    }

    /// Index of v = 0 in `v_nodes`.
    #[inline]
    pub fn zero_v_index(&self) -> usize {
        self.u_nodes.len() - 1
    }

    #[inline]
    pub fn u_max(&self) -> f64 {
        *self.u_nodes.last().unwrap()
    }

    /// Does grid node (i, j) lie in the triangle |v| ≤ u?
    #[inline]
    pub fn in_triangle(&self, i: usize, j: usize) -> bool {
        let iz = self.zero_v_index();
        j.abs_diff(iz) <= i
    }

    /// Largest i with u_nodes[i] <= u, clamped so i+1 is valid.
    pub(crate) fn u_cell(&self, u: f64) -> usize {
        let n = self.u_nodes.len();
        let i = self.u_nodes.partition_point(|&x| x <= u);
        i.clamp(1, n - 1) - 1
    }

    pub(crate) fn v_cell(&self, v: f64) -> usize {
        let n = self.v_nodes.len();
        let j = self.v_nodes.partition_point(|&x| x <= v);
        j.clamp(1, n - 1) - 1
    }
}

/// ψ-table plus the full v-line integrals used for on-axis values.
pub(crate) struct TriangleCumulative {
    pub psi: Array2<f64>,
    /// `v_line[i] = ∫_{-u_i}^{u_i} H(u_i, v') dv'` (same trapezoid scheme).
    pub v_line: Vec<f64>,
}

pub(crate) fn cumulative_triangle_full<H>(h: H, grid: &CharGrid) -> TriangleCumulative
where
    H: Fn(f64, f64) -> f64 + Sync,
{
    let n_u = grid.n_u();
    let n_v = grid.n_v();
    let iz = grid.zero_v_index();
    let u = grid.u_nodes();
    let v = grid.v_nodes();

    // Pass 1 (parallel over u-rows): inner prefix integrals
    //   g[i][j] = ∫_{-u_i}^{v_j} H(u_i, v') dv',  defined for |v_j| ≤ u_i.
    let row_idx: ndarray::Array1<usize> = (0..n_u).collect();
    let mut g = Array2::<f64>::zeros((n_u, n_v));
    Zip::from(g.axis_iter_mut(Axis(0)))
        .and(&row_idx)
        .par_for_each(|mut row, &i| {
            let (jlo, jhi) = (iz - i, iz + i);
            let mut acc = 0.0;
            let mut prev = h(u[i], v[jlo]);
            row[jlo] = 0.0;
            for j in (jlo + 1)..=jhi {
                let cur = h(u[i], v[j]);
                acc += 0.5 * (v[j] - v[j - 1]) * (prev + cur);
                row[j] = acc;
                prev = cur;
            }
        });

    let v_line: Vec<f64> = (0..n_u).map(|i| g[(i, iz + i)]).collect();

    // Pass 2 (parallel over v-columns): outer prefix integrals
    //   ψ[i][j] = (1/4) ∫_{|v_j|}^{u_i} g(u', v_j) du',  starting at i = |j-iz|.
    let col_idx: ndarray::Array1<usize> = (0..n_v).collect();
    let mut psi = Array2::<f64>::zeros((n_u, n_v));
    Zip::from(psi.axis_iter_mut(Axis(1)))
        .and(g.axis_iter(Axis(1)))
        .and(&col_idx)
        .par_for_each(|mut col, gcol, &j| {
            let ilo = j.abs_diff(iz);
            let mut acc = 0.0;
            for i in (ilo + 1)..n_u {
                acc += 0.125 * (u[i] - u[i - 1]) * (gcol[i - 1] + gcol[i]);
                col[i] = acc;
            }
        });

    TriangleCumulative { psi, v_line }
}

/// Cumulative evaluation of the double integral
/// `ψ(u,v) = (1/4) ∫_{|v|}^u ∫_{-u'}^v H dv' du'` at every grid node.
///
/// Returns an (n_u × n_v) table, zero outside the triangle. Composite
/// trapezoid in both directions: second order under mesh refinement.
pub fn cumulative_triangle<H>(h: H, grid: &CharGrid) -> Array2<f64>
where
    H: Fn(f64, f64) -> f64 + Sync,
{
    cumulative_triangle_full(h, grid).psi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for n in [2usize, 5, 10, 30] {
            let (x, w) = gauss_legendre(n);
            assert_eq!(x.len(), n);
            // weights sum to the interval length
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            // exact through degree 2n-1
            for k in (1..2 * n).step_by(2) {
                let odd: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                assert_abs_diff_eq!(odd, 0.0, epsilon = 1e-13);
            }
            let k = 2 * n - 2;
            let even: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            assert_relative_eq!(even, 2.0 / (k as f64 + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn integrates_decaying_rational() {
        // ∫_0^1e6 dx/(1+x)^2 = 1 - 1/(1+1e6)
        let r = integrate_1d(|x| (1.0 + x).powi(-2), 0.0, 1e6, 1e-10, &[]).unwrap();
        assert_relative_eq!(r.value, 1.0 - 1.0 / (1.0 + 1e6), max_relative = 1e-9);
        assert!(r.error_estimate <= 1e-10);
        assert!(r.evaluations > 0);
    }

    #[test]
    fn kink_split_handles_absolute_value() {
        // ∫_{-1}^{1} dx/(1+|x|)^2 = 1
        let r = integrate_1d(|x| (1.0 + x.abs()).powi(-2), -1.0, 1.0, 1e-12, &[0.0]).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-11);
    }

    #[test]
    fn fake_kink_is_harmless() {
        let smooth = |x: f64| (-x * x).exp();
        let plain = integrate_1d(smooth, -2.0, 3.0, 1e-12, &[]).unwrap();
        let split = integrate_1d(smooth, -2.0, 3.0, 1e-12, &[0.7]).unwrap();
        assert_abs_diff_eq!(plain.value, split.value, epsilon = 1e-12);
    }

    #[test]
    fn empty_and_reversed_ranges() {
        let r = integrate_1d(|x| x, 2.0, 2.0, 1e-10, &[]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.evaluations > 0);
        let fwd = integrate_1d(|x| x * x, 0.0, 2.0, 1e-12, &[]).unwrap();
        let rev = integrate_1d(|x| x * x, 2.0, 0.0, 1e-12, &[]).unwrap();
        assert_relative_eq!(fwd.value, -rev.value, max_relative = 1e-14);
    }

    #[test]
    fn budget_exhaustion_is_an_error_with_best_estimate() {
        // highly oscillatory; 120 evaluations cannot resolve it
        let err = integrate_1d_with_budget(|x| (300.0 * x).sin(), 0.0, 7.0, 1e-12, &[], 120)
            .unwrap_err();
        match err {
            QuadError::BudgetExhausted {
                value,
                error_estimate,
                evaluations,
                budget,
            } => {
                assert!(value.is_finite());
                assert!(error_estimate.is_finite());
                assert!(evaluations <= budget);
            }
            other => panic!("expected BudgetExhausted, got {other:?}"),
        }
    }

    #[test]
    fn non_integrable_singularity_is_an_error() {
        // asymmetric range so odd cancellation cannot hide the pole
        let err = integrate_1d(|x| 1.0 / x, -0.5, 1.0, 1e-6, &[]).unwrap_err();
        assert!(matches!(
            err,
            QuadError::NonFiniteIntegrand { .. }
                | QuadError::ToleranceUnreachable { .. }
                | QuadError::BudgetExhausted { .. }
        ));
        let err = integrate_1d(|_| f64::NAN, 0.0, 1.0, 1e-6, &[]).unwrap_err();
        assert!(matches!(err, QuadError::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn improper_integrals_via_rational_map() {
        // ∫_0^∞ dv/(1+v)^3 = 1/2
        let r = integrate_to_infinity(|v| (1.0 + v).powi(-3), 0.0, 1e-10, &[]).unwrap();
        assert_relative_eq!(r.value, 0.5, max_relative = 1e-9);
        // ∫_2^∞ dv/(1+v)^{2.5} = 2·3^{-5/2}
        let r = integrate_to_infinity(|v| (1.0 + v).powf(-2.5), 2.0, 1e-10, &[]).unwrap();
        assert_relative_eq!(r.value, 2.0 / 3.0f64.powf(2.5), max_relative = 1e-9);
        // ∫_0^∞ e^{-x²} dx = √π/2
        let r = integrate_to_infinity(|x| (-x * x).exp(), 0.0, 1e-12, &[]).unwrap();
        assert_relative_eq!(
            r.value,
            0.5 * std::f64::consts::PI.sqrt(),
            max_relative = 1e-11
        );
    }

    #[test]
    fn halton_is_deterministic_and_in_unit_cube() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        for k in 0..200 {
            let p = halton_point(DEFAULT_SAMPLE_SEED, k, &[2, 3, 5]);
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
            assert_eq!(p, halton_point(DEFAULT_SAMPLE_SEED, k, &[2, 3, 5]));
        }
    }

    #[test]
    fn grid_construction_and_mirroring() {
        let g = CharGrid::from_u_nodes(vec![0.0, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(g.v_nodes(), &[-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]);
        assert_eq!(g.zero_v_index(), 3);
        assert!(g.in_triangle(2, 3));
        assert!(g.in_triangle(2, 5));
        assert!(!g.in_triangle(1, 5));

        assert!(CharGrid::from_u_nodes(vec![0.0]).is_err());
        assert!(CharGrid::from_u_nodes(vec![0.5, 1.0]).is_err());
        assert!(CharGrid::from_u_nodes(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn standard_grid_shape() {
        let g = CharGrid::standard(1000.0).unwrap();
        assert_eq!(g.u_nodes()[1], 1.0 / 64.0);
        assert_eq!(g.u_max(), 1000.0);
        assert_eq!(g.n_v(), 2 * g.n_u() - 1);
        // knee node present, geometric step after it
        let i10 = g.u_nodes().iter().position(|&u| u == 10.0).unwrap();
        assert_relative_eq!(g.u_nodes()[i10 + 1], 10.5, max_relative = 1e-12);
    }

    /// Constant unit source: H = (u-v)/2, ψ = (vu² - v²u + u³ - v³)/16 for v ≥ 0.
    fn psi_const_exact(u: f64, v: f64) -> f64 {
        (v * u * u - v * v * u + u * u * u - v * v * v) / 16.0
    }

    #[test]
    fn cumulative_triangle_constant_source() {
        let grid = CharGrid::with_resolution(4.0, 64, 1.05, 10.0).unwrap();
        let psi = cumulative_triangle(|u, v| 0.5 * (u - v), &grid);
        let iz = grid.zero_v_index();
        // node (u=2, v=1)
        let i = grid.u_nodes().iter().position(|&u| u == 2.0).unwrap();
        let j = grid.v_nodes().iter().position(|&v| v == 1.0).unwrap();
        // composite-trapezoid truncation at h = 1/64 is ~1e-5 relative
        assert_relative_eq!(psi[(i, j)], 0.5625, max_relative = 5e-5);
        // null data on both characteristic boundaries
        for i in 0..grid.n_u() {
            assert_eq!(psi[(i, iz - i)], 0.0);
            assert_eq!(psi[(i, iz + i)], 0.0);
        }
    }

    #[test]
    fn cumulative_triangle_second_order() {
        // inner integral is exact for the constant source, outer is trapezoid
        // on a quadratic: error must fall by ~4 per spacing halving.
        let err_at = |per_unit: u32| {
            let grid = CharGrid::with_resolution(3.0, per_unit, 1.05, 10.0).unwrap();
            let psi = cumulative_triangle(|u, v| 0.5 * (u - v), &grid);
            let i = grid.u_nodes().iter().position(|&u| u == 2.0).unwrap();
            let j = grid.v_nodes().iter().position(|&v| v == 1.0).unwrap();
            (psi[(i, j)] - psi_const_exact(2.0, 1.0)).abs()
        };
        let (e8, e16, e32) = (err_at(8), err_at(16), err_at(32));
        let r1 = e8 / e16;
        let r2 = e16 / e32;
        assert!((3.5..4.5).contains(&r1), "refinement ratio {r1}");
        assert!((3.5..4.5).contains(&r2), "refinement ratio {r2}");
    }

    #[test]
    fn cumulative_triangle_is_linear_in_the_source() {
        let grid = CharGrid::with_resolution(2.0, 16, 1.05, 10.0).unwrap();
        let h1 = |u: f64, v: f64| 0.5 * (u - v);
        let h2 = |u: f64, v: f64| (u * 0.3).cos() * (1.0 + v * v).recip();
        let a = cumulative_triangle(h1, &grid);
        let b = cumulative_triangle(h2, &grid);
        let combo = cumulative_triangle(|u, v| 2.0 * h1(u, v) - 0.5 * h2(u, v), &grid);
        for ((i, j), &c) in combo.indexed_iter() {
            let expect = 2.0 * a[(i, j)] - 0.5 * b[(i, j)];
            assert_abs_diff_eq!(c, expect, epsilon = 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn discrete_mixed_derivative_recovers_source() {
        // 4 ΔᵥΔᵤψ / (Δu Δv) equals the four-corner average of H on each cell,
        // which is O(h²) from H at the cell center.
        let check = |per_unit: u32| -> f64 {
            let grid = CharGrid::with_resolution(2.0, per_unit, 1.05, 10.0).unwrap();
            let h = |u: f64, v: f64| (0.4 * u).cos() * (0.3 * v).sin() + 0.5 * (u - v);
            let psi = cumulative_triangle(h, &grid);
            let iz = grid.zero_v_index();
            let (un, vn) = (grid.u_nodes(), grid.v_nodes());
            let mut worst = 0.0f64;
            for i in 1..grid.n_u() {
                for j in (iz - i + 1)..=(iz + i) {
                    // all four cell corners must lie inside the triangle
                    if j.abs_diff(iz).max((j - 1).abs_diff(iz)) > i - 1 {
                        continue;
                    }
                    let num = psi[(i, j)] - psi[(i - 1, j)] - psi[(i, j - 1)] + psi[(i - 1, j - 1)];
                    let den = (un[i] - un[i - 1]) * (vn[j] - vn[j - 1]);
                    let center = h(0.5 * (un[i] + un[i - 1]), 0.5 * (vn[j] + vn[j - 1]));
                    worst = worst.max((4.0 * num / den - center).abs());
                }
            }
            worst
        };
        let (e8, e32) = (check(8), check(32));
        assert!(e32 < e8 / 8.0, "mixed-derivative residual did not converge: {e8} -> {e32}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quad_linearity(alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
            let f = |x: f64| (1.0 + x * x).recip();
            let g = |x: f64| (0.5 * x).cos();
            let fa = integrate_1d(f, 0.0, 2.0, 1e-12, &[]).unwrap().value;
            let ga = integrate_1d(g, 0.0, 2.0, 1e-12, &[]).unwrap().value;
            let combo = integrate_1d(|x| alpha * f(x) + beta * g(x), 0.0, 2.0, 1e-12, &[])
                .unwrap()
                .value;
            prop_assert!((combo - (alpha * fa + beta * ga)).abs() <= 1e-10);
        }
    }
}
