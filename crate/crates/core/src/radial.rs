//! The reduced 1+1 solver for □φ = G(t, r) with radial sources and
//! vanishing initial data.
//!
//! In null coordinates u = t + r, v = t - r the substitution ψ = rφ turns
//! the radial wave operator into 4 ∂ᵥ∂ᵤψ = H with H(u, v) = r G(t, r), and
//! null data ψ = 0 on both characteristic boundaries v = ±u of the triangle
//! u ≥ 0, |v| ≤ u. Integrating twice gives the exact representation
//!
//! ```text
//!   ∂ᵤψ(u,v) = (1/4) ∫_{-u}^{v} H(u, v') dv'
//!   ψ(u,v)   = (1/4) ∫_{|v|}^{u} ∫_{-u'}^{v} H(u', v') dv' du'
//! ```
//!
//! and, on the symmetry axis r = 0 (v = u), the pointwise value
//! φ(t, 0) = 2 ∂ᵤψ(t, t), since ∂ᵥψ(t, t) = -∂ᵤψ(t, t) there.
//!
//! [`du_psi`], [`dv_psi`] and [`axis_value`] evaluate these formulas at a
//! single point with the adaptive integrator; [`solve`] tabulates ψ and
//! φ = ψ/r on a whole [`CharGrid`] with the O(N²) cumulative scheme and
//! supports interpolation, CSV export and weighted sup scans.
//!
//! Note the lower-order term in ∂ᵥψ: differentiating the ψ formula for
//! v > 0 also moves the |v| limit, so
//!
//! ```text
//!   ∂ᵥψ(u,v) = (1/4) ∫_{|v|}^{u} H(u', v) du'  -  [v > 0] ∂ᵤψ(v, v).
//! ```
//!
//! Dropping that boundary term breaks the axis identity; the unit tests pin
//! it against the constant-source closed form.

use std::io::{self, Write};
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;

use crate::quadrature::{
    cumulative_triangle_full, halton_point, integrate_1d, CharGrid, QuadError, QuadResult,
};
use crate::types::{
    weighted_amplitude, DecayProfile, InvalidInput, NullPoint, SpacetimePoint, WeightExponents,
};

/// A radial source term G(t, r), together with the abscissae where its
/// t - r dependence may kink (the weight ⟨t-r⟩ is not smooth at t = r).
#[derive(Clone)]
pub struct RadialSource {
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for RadialSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialSource").finish_non_exhaustive()
    }
}

impl RadialSource {
    /// The constant source G ≡ a; its solution is φ = a t²/2, the standard
    /// closed-form cross-check.
    pub fn constant(a: f64) -> Self {
        Self {
            f: Arc::new(move |_, _| a),
        }
    }

    /// Arbitrary source. The closure must return finite values on t, r ≥ 0;
    /// non-finite values surface as errors or NaN tables downstream.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f) }
    }

    /// Source of the first decay lemma: A ⟨t+r⟩^{-p} ⟨t-r⟩^{-q}, i.e. a
    /// profile with no radial factor (λ = 0).
    pub fn source_lemma1(profile: DecayProfile) -> Result<Self, InvalidInput> {
        if profile.lambda() != 0.0 {
            return Err(InvalidInput::Hypothesis {
                requirement: "lambda == 0",
                got: profile.lambda(),
            });
        }
        Ok(Self {
            f: Arc::new(move |t, r| profile.value(t, r)),
        })
    }

    /// Source of the second decay lemma: A ⟨t+r⟩^{-p} ⟨t-r⟩^{-q} ⟨r⟩^{-λ}
    /// with a genuine radial factor (λ > 0).
    pub fn source_lemma2(profile: DecayProfile) -> Result<Self, InvalidInput> {
        if !(profile.lambda() > 0.0) {
            return Err(InvalidInput::Hypothesis {
                requirement: "lambda > 0",
                got: profile.lambda(),
            });
        }
        Ok(Self {
            f: Arc::new(move |t, r| profile.value(t, r)),
        })
    }

    #[inline]
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        (self.f)(t, r)
    }

    /// H(u, v) = r G(t, r) in null coordinates.
    #[inline]
    pub fn h_of_uv(&self, u: f64, v: f64) -> f64 {
        let t = 0.5 * (u + v);
        let r = 0.5 * (u - v);
        r * (self.f)(t, r)
    }
}

/// ∂ᵤψ(u, v) = (1/4) ∫_{-u}^{v} H(u, v') dv' by adaptive quadrature.
///
/// The integrand may kink at v' = 0 (through ⟨t-r⟩ = ⟨v'⟩), so 0 is always
/// passed as a split point.
pub fn du_psi(src: &RadialSource, p: NullPoint, tol: f64) -> Result<QuadResult, QuadError> {
    let (u, v) = (p.u(), p.v());
    let r = integrate_1d(|vp| src.h_of_uv(u, vp), -u, v, 4.0 * tol, &[0.0])?;
    Ok(QuadResult {
        value: 0.25 * r.value,
        error_estimate: 0.25 * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// ∂ᵥψ(u, v), including the boundary term -∂ᵤψ(v, v) that appears for
/// v > 0 when the moving limit |v| is differentiated.
pub fn dv_psi(src: &RadialSource, p: NullPoint, tol: f64) -> Result<QuadResult, QuadError> {
    let (u, v) = (p.u(), p.v());
    let line = integrate_1d(|up| src.h_of_uv(up, v), v.abs(), u, 4.0 * tol, &[0.0])?;
    let mut value = 0.25 * line.value;
    let mut error = 0.25 * line.error_estimate;
    let mut evaluations = line.evaluations;
    if v > 0.0 {
        let corner = du_psi(src, NullPoint::new(v, v).expect("diagonal point is valid"), tol)?;
        value -= corner.value;
        error += corner.error_estimate;
        evaluations += corner.evaluations;
    }
    Ok(QuadResult {
        value,
        error_estimate: error,
        evaluations,
    })
}

/// Pointwise ψ(u, v) by nested adaptive quadrature (outer u'-integral of
/// [`du_psi`]). Slow but grid-free; the high-accuracy cross-check for the
/// tabulated solver.
pub fn psi_pointwise(src: &RadialSource, p: NullPoint, tol: f64) -> Result<QuadResult, QuadError> {
    let (u, v) = (p.u(), p.v());
    let span = u - v.abs();
    if span == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    // split the budget: inner integrals must be quiet enough that the outer
    // integrator sees a smooth function
    let inner_tol = 0.25 * tol / (1.0 + span);
    let outer = integrate_1d(
        |up| {
            du_psi(src, NullPoint::new(up, v).expect("u' >= |v| inside the range"), inner_tol)
                .map(|r| r.value)
                .unwrap_or(f64::NAN)
        },
        v.abs(),
        u,
        0.5 * tol,
        &[],
    )?;
    Ok(outer)
}

/// Pointwise φ(t, r) by nested adaptive quadrature: ψ/r off the axis, the
/// axis limit 2 ∂ᵤψ(t, t) at r = 0.
pub fn phi_pointwise(src: &RadialSource, t: f64, r: f64, tol: f64) -> Result<QuadResult, QuadError> {
    if !(t >= 0.0 && r >= 0.0) || !t.is_finite() || !r.is_finite() {
        return Err(QuadError::BadRequest {
            msg: format!("point must satisfy t >= 0, r >= 0 (got t = {t}, r = {r})"),
        });
    }
    if r == 0.0 {
        return axis_value(src, t, tol);
    }
    let p = NullPoint::new(t + r, t - r).expect("t, r >= 0 maps into the triangle");
    let psi = psi_pointwise(src, p, tol * r)?;
    Ok(QuadResult {
        value: psi.value / r,
        error_estimate: psi.error_estimate / r,
        evaluations: psi.evaluations,
    })
}

/// Pointwise axis value φ(t, 0) = 2 ∂ᵤψ(t, t) = (1/2) ∫_{-t}^{t} H(t, v') dv'.
pub fn axis_value(src: &RadialSource, t: f64, tol: f64) -> Result<QuadResult, QuadError> {
    if !(t >= 0.0) {
        return Err(QuadError::BadRequest {
            msg: format!("axis time must be nonnegative (got {t})"),
        });
    }
    let p = NullPoint::new(t, t).expect("diagonal point is valid");
    let r = du_psi(src, p, 0.5 * tol)?;
    Ok(QuadResult {
        value: 2.0 * r.value,
        error_estimate: 2.0 * r.error_estimate,
        evaluations: r.evaluations,
    })
}

/// Result of a weighted amplitude scan over a solved field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupScan {
    /// sup over scanned points of |φ| ⟨t+r⟩^a ⟨t-r⟩^b.
    pub sup: f64,
    pub argmax: SpacetimePoint,
    /// Number of off-grid samples included (grid nodes are always scanned).
    pub samples: usize,
}

/// The solved field on a characteristic grid: ψ = rφ and φ tables.
///
/// Tables are rectangular (n_u × n_v) and zero outside the triangle
/// |v| ≤ u. On the axis v = u the φ table stores the limit value
/// 2 ∂ᵤψ(t, t) computed from the same cumulative pass, not a 0/0 division.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: CharGrid,
    psi: Array2<f64>,
    phi: Array2<f64>,
}

/// Solve □φ = G on the grid's triangle: returns tabulated ψ and φ.
///
/// Cost is O(N_u · N_v) source evaluations; rows and columns run in
/// parallel. Accuracy is second order in the mesh spacing.
pub fn solve(src: &RadialSource, grid: &CharGrid) -> RadialField {
    let cum = cumulative_triangle_full(|u, v| src.h_of_uv(u, v), grid);
    let psi = cum.psi;
    let iz = grid.zero_v_index();
    let u = grid.u_nodes();
    let v = grid.v_nodes();

    let mut phi = Array2::<f64>::zeros((grid.n_u(), grid.n_v()));
    let row_idx: Vec<usize> = (0..grid.n_u()).collect();
    phi.outer_iter_mut()
        .zip(row_idx)
        .par_bridge()
        .for_each(|(mut row, i)| {
            for j in (iz - i)..(iz + i) {
                let r = 0.5 * (u[i] - v[j]);
                row[j] = psi[(i, j)] / r;
            }
            // axis limit: φ(t, 0) = 2 ∂ᵤψ(t, t) = v_line/2
            row[iz + i] = 0.5 * cum.v_line[i];
        });

    RadialField {
        grid: grid.clone(),
        psi,
        phi,
    }
}

impl RadialField {
    /// Tabulate a known φ directly (ψ = rφ); used to seed iterations and in
    /// tests.
    pub fn from_phi<F>(grid: &CharGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let iz = grid.zero_v_index();
        let un = grid.u_nodes();
        let vn = grid.v_nodes();
        let mut psi = Array2::<f64>::zeros((grid.n_u(), grid.n_v()));
        let mut phi = Array2::<f64>::zeros((grid.n_u(), grid.n_v()));
        psi.outer_iter_mut()
            .zip(phi.outer_iter_mut())
            .zip(0..grid.n_u())
            .par_bridge()
            .for_each(|((mut prow, mut frow), i)| {
                for j in (iz - i)..=(iz + i) {
                    let t = 0.5 * (un[i] + vn[j]);
                    let r = 0.5 * (un[i] - vn[j]);
                    let val = f(t, r);
                    frow[j] = val;
                    prow[j] = r * val;
                }
            });
        Self {
            grid: grid.clone(),
            psi,
            phi,
        }
    }

    #[inline]
    pub fn grid(&self) -> &CharGrid {
        &self.grid
    }

    #[inline]
    pub fn psi_table(&self) -> &Array2<f64> {
        &self.psi
    }

    #[inline]
    pub fn phi_table(&self) -> &Array2<f64> {
        &self.phi
    }

    /// Nodewise difference `self - other` of two fields on the same grid.
    ///
    /// Panics if the grids differ; differencing fields from distinct grids
    /// is a programming error, not a data condition.
    pub fn difference(&self, other: &RadialField) -> RadialField {
        assert_eq!(
            self.grid.u_nodes(),
            other.grid.u_nodes(),
            "fields live on different grids"
        );
        RadialField {
            grid: self.grid.clone(),
            psi: &self.psi - &other.psi,
            phi: &self.phi - &other.phi,
        }
    }

    /// Node value lookup with mirror extension across the axis v = u.
    ///
    /// ψ is odd under r → -r (it is r times an even function), φ even; a
    /// fictitious node above the diagonal reflects to (v_j, u_i). Nodes
    /// below v = -u (t < 0) stay zero, which is the causal continuation.
    fn node(&self, table: &Array2<f64>, sign: f64, i: usize, j: usize) -> f64 {
        let iz = self.grid.zero_v_index();
        if j > iz + i {
            let ui = j - iz;
            sign * table[(ui, iz + i)]
        } else {
            table[(i, j)]
        }
    }

    fn bilinear(&self, table: &Array2<f64>, sign: f64, t: f64, r: f64) -> Option<f64> {
        if !(r >= 0.0) || !t.is_finite() || !r.is_finite() {
            return None;
        }
        if t <= 0.0 {
            // vanishing data and a source acting at t ≥ 0: nothing yet
            return Some(0.0);
        }
        let u = t + r;
        let v = t - r;
        if u > self.grid.u_max() {
            return None;
        }
        let un = self.grid.u_nodes();
        let vn = self.grid.v_nodes();
        let i = self.grid.u_cell(u);
        let j = self.grid.v_cell(v);
        let wu = (u - un[i]) / (un[i + 1] - un[i]);
        let wv = (v - vn[j]) / (vn[j + 1] - vn[j]);
        let c00 = self.node(table, sign, i, j);
        let c01 = self.node(table, sign, i, j + 1);
        let c10 = self.node(table, sign, i + 1, j);
        let c11 = self.node(table, sign, i + 1, j + 1);
        Some(
            (1.0 - wu) * (1.0 - wv) * c00
                + (1.0 - wu) * wv * c01
                + wu * (1.0 - wv) * c10
                + wu * wv * c11,
        )
    }

    /// Bilinear ψ(t, r); `None` outside the tabulated domain (r < 0 or
    /// t + r beyond the grid). t ≤ 0 returns exactly 0.
    pub fn psi_at(&self, t: f64, r: f64) -> Option<f64> {
        self.bilinear(&self.psi, -1.0, t, r)
    }

    /// Bilinear φ(t, r); same domain rules as [`Self::psi_at`].
    pub fn phi_at(&self, t: f64, r: f64) -> Option<f64> {
        self.bilinear(&self.phi, 1.0, t, r)
    }

    /// Write the in-triangle nodes as CSV (`u,v,t,r,psi,phi`), row-major,
    /// keeping every `stride`-th u-row and v-node. Plain `Display` of f64
    /// round-trips exactly, so output is bit-deterministic.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize) -> io::Result<()> {
        let stride = stride.max(1);
        let iz = self.grid.zero_v_index();
        let un = self.grid.u_nodes();
        let vn = self.grid.v_nodes();
        writeln!(out, "u,v,t,r,psi,phi")?;
        for i in (0..self.grid.n_u()).step_by(stride) {
            let mut j = iz - i;
            while j <= iz + i {
                let (u, v) = (un[i], vn[j]);
                let t = 0.5 * (u + v);
                let r = 0.5 * (u - v);
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    u,
                    v,
                    t,
                    r,
                    self.psi[(i, j)],
                    self.phi[(i, j)]
                )?;
                // always land on the axis node so the r = 0 line is complete
                j = if j + stride > iz + i && j < iz + i {
                    iz + i
                } else {
                    j + stride
                };
            }
        }
        Ok(())
    }

    /// Scan sup |φ| ⟨t+r⟩^a ⟨t-r⟩^b over every in-triangle grid node plus
    /// `off_grid_samples` Halton points (bases 2, 3, start offset `seed`).
    ///
    /// Deterministic: ties resolve to the smallest linear index, and the
    /// parallel reduction preserves that order.
    pub fn weighted_sup(&self, w: WeightExponents, off_grid_samples: usize, seed: u64) -> SupScan {
        let iz = self.grid.zero_v_index();
        let un = self.grid.u_nodes();
        let vn = self.grid.v_nodes();
        let n_v = self.grid.n_v();
        let u_max = self.grid.u_max();

        let amp = |value: f64, t: f64, r: f64| {
            let p = SpacetimePoint::new(t, r).expect("scan points stay in the domain");
            weighted_amplitude(value, p, w)
        };

        // (weighted amplitude, linear index, t, r); max by amplitude,
        // smallest index on ties — an associative, order-free reduction.
        let better = |a: (f64, usize, f64, f64), b: (f64, usize, f64, f64)| {
            match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Equal => {
                    if b.1 < a.1 {
                        b
                    } else {
                        a
                    }
                }
            }
        };
        let zero = (f64::NEG_INFINITY, usize::MAX, 0.0, 0.0);

        let grid_best = (0..self.grid.n_u())
            .into_par_iter()
            .map(|i| {
                let mut best = zero;
                for j in (iz - i)..=(iz + i) {
                    let t = 0.5 * (un[i] + vn[j]);
                    let r = 0.5 * (un[i] - vn[j]);
                    let a = amp(self.phi[(i, j)], t, r);
                    best = better(best, (a, i * n_v + j, t, r));
                }
                best
            })
            .reduce(|| zero, better);

        let base_idx = self.grid.n_u() * n_v;
        let sample_best = (0..off_grid_samples as u64)
            .into_par_iter()
            .map(|k| {
                let s = halton_point(seed, k, &[2, 3]);
                let u = s[0] * u_max;
                let v = (2.0 * s[1] - 1.0) * u;
                let t = 0.5 * (u + v);
                let r = 0.5 * (u - v);
                match self.phi_at(t, r) {
                    Some(val) => (amp(val, t, r), base_idx + k as usize, t, r),
                    None => zero,
                }
            })
            .reduce(|| zero, better);

        let (sup, _, t, r) = better(grid_best, sample_best);
        SupScan {
            sup,
            argmax: SpacetimePoint::new(t, r).expect("argmax is in the domain"),
            samples: off_grid_samples,
        }
    }

    /// Largest non-finite-free check: true when every in-triangle node of
    /// both tables is finite.
    pub fn is_finite(&self) -> bool {
        let iz = self.grid.zero_v_index();
        (0..self.grid.n_u()).all(|i| {
            ((iz - i)..=(iz + i)).all(|j| self.psi[(i, j)].is_finite() && self.phi[(i, j)].is_finite())
        })
    }
}

/// Convenience: the lemma-1 style profile sources used across the test
/// suites, validated once.
pub fn lemma1_default_source() -> RadialSource {
    RadialSource::source_lemma1(DecayProfile::flat(1.0, 3.0, 2.0).expect("valid profile"))
        .expect("lambda is zero")
}

pub fn lemma2_default_source() -> RadialSource {
    RadialSource::source_lemma2(
        DecayProfile::new(1.0, 1.0, 3.0, 3.0).expect("valid profile"),
    )
    .expect("lambda is positive")
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<RadialSource>();
    check::<RadialField>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const TOL: f64 = 1e-11;

    fn small_grid() -> CharGrid {
        CharGrid::with_resolution(8.0, 64, 1.05, 10.0).unwrap()
    }

    #[test]
    fn du_psi_closed_forms() {
        // constant source: ∂ᵤψ(u,v) = (1/8)(uv - v²/2 + u²/2 + ... ) at (2,1) = 0.9375
        let c = RadialSource::constant(1.0);
        let p = NullPoint::new(2.0, 1.0).unwrap();
        let r = du_psi(&c, p, TOL).unwrap();
        assert_relative_eq!(r.value, 0.9375, max_relative = 1e-10);

        // decaying source (A,p,q) = (1,3,2): odd part cancels, value is 1/64
        let s = lemma1_default_source();
        let p = NullPoint::new(1.0, 1.0).unwrap();
        let r = du_psi(&s, p, TOL).unwrap();
        assert_relative_eq!(r.value, 1.0 / 64.0, max_relative = 1e-9);
    }

    #[test]
    fn dv_psi_includes_moving_limit_term() {
        // constant source: ψ = (vu² - v²u + u³ - v³)/16, ∂ᵥψ = (u² - 2uv - 3v²)/16
        let c = RadialSource::constant(1.0);
        let p = NullPoint::new(2.0, 1.0).unwrap();
        let r = dv_psi(&c, p, TOL).unwrap();
        assert_relative_eq!(r.value, -3.0 / 16.0, max_relative = 1e-9);
        // v < 0 branch has no boundary term: ∂ᵥψ(2,-1) = (4 + 4 - 3)/16
        let p = NullPoint::new(2.0, -1.0).unwrap();
        let r = dv_psi(&c, p, TOL).unwrap();
        assert_relative_eq!(r.value, 5.0 / 16.0, max_relative = 1e-9);
    }

    #[test]
    fn axis_identity_constant_source() {
        // φ(t, 0) = t²/2 for G ≡ 1
        for t in [0.5, 1.0, 2.0, 3.7] {
            let r = axis_value(&RadialSource::constant(1.0), t, TOL).unwrap();
            assert_relative_eq!(r.value, 0.5 * t * t, max_relative = 1e-9);
        }
    }

    #[test]
    fn axis_closed_form_decaying_source() {
        // (A,p,q) = (1,3,2): φ(t,0) = t² / (2 (1+t)⁴)
        let s = lemma1_default_source();
        for t in [1.0, 2.0, 4.0, 7.5] {
            let got = axis_value(&s, t, TOL).unwrap().value;
            let want = t * t / (2.0 * (1.0 + t).powi(4));
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
        assert_relative_eq!(
            axis_value(&s, 4.0, TOL).unwrap().value,
            0.0128,
            max_relative = 1e-9
        );
    }

    #[test]
    fn mixed_derivative_matches_source() {
        // 4 ∂ᵥ∂ᵤψ = H: difference du_psi in v against H/4
        let s = lemma2_default_source();
        let (u, v, eps) = (3.0, 0.7, 1e-5);
        let hi = du_psi(&s, NullPoint::new(u, v + eps).unwrap(), 1e-13)
            .unwrap()
            .value;
        let lo = du_psi(&s, NullPoint::new(u, v - eps).unwrap(), 1e-13)
            .unwrap()
            .value;
        assert_relative_eq!(
            (hi - lo) / (2.0 * eps),
            0.25 * s.h_of_uv(u, v),
            max_relative = 1e-6
        );
    }

    #[test]
    fn solve_constant_source_is_quadratic_in_time() {
        let grid = small_grid();
        let field = solve(&RadialSource::constant(1.0), &grid);
        // φ = t²/2 at every node, including the axis
        let iz = grid.zero_v_index();
        for &(i, dj) in &[(64usize, 0isize), (128, 64), (320, -160), (448, 448)] {
            let j = (iz as isize + dj) as usize;
            let t = 0.5 * (grid.u_nodes()[i] + grid.v_nodes()[j]);
            let expect = 0.5 * t * t;
            if expect == 0.0 {
                assert_abs_diff_eq!(field.phi_table()[(i, j)], 0.0, epsilon = 1e-12);
            } else {
                assert_relative_eq!(field.phi_table()[(i, j)], expect, max_relative = 5e-4);
            }
        }
        // interpolation off the nodes
        assert_relative_eq!(field.phi_at(2.3, 0.9).unwrap(), 0.5 * 2.3 * 2.3, max_relative = 1e-3);
        assert_relative_eq!(field.psi_at(2.3, 0.9).unwrap(), 0.9 * 0.5 * 2.3 * 2.3, max_relative = 1e-3);
    }

    #[test]
    fn pointwise_evaluation_is_high_accuracy() {
        // nested adaptive quadrature hits reference values far below grid error
        let c = RadialSource::constant(1.0);
        let r = phi_pointwise(&c, 2.3, 0.9, 1e-10).unwrap();
        assert_relative_eq!(r.value, 0.5 * 2.3 * 2.3, max_relative = 1e-8);
        let r = phi_pointwise(&c, 4.0, 0.0, 1e-10).unwrap();
        assert_relative_eq!(r.value, 8.0, max_relative = 1e-9);

        let s = lemma1_default_source();
        let r = phi_pointwise(&s, 2.0, 1.0, 1e-11).unwrap();
        assert_relative_eq!(r.value, 0.023985102159271052, max_relative = 1e-8);

        // ψ at a diagonal point is exactly zero without any integration
        let p = NullPoint::new(3.0, 3.0).unwrap();
        let r = psi_pointwise(&s, p, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.evaluations, 0);

        assert!(phi_pointwise(&s, -1.0, 0.5, 1e-8).is_err());
    }

    #[test]
    fn solve_matches_pointwise_oracle_values() {
        // independently computed reference values for the two default sources
        let grid = small_grid();
        let f1 = solve(&lemma1_default_source(), &grid);
        assert_relative_eq!(
            f1.phi_at(2.0, 1.0).unwrap(),
            0.023985102159271052,
            max_relative = 2e-4
        );
        assert_relative_eq!(f1.phi_at(4.0, 0.0).unwrap(), 0.0128, max_relative = 2e-4);

        let f2 = solve(&lemma2_default_source(), &grid);
        assert_relative_eq!(
            f2.phi_at(4.0, 0.0).unwrap(),
            0.007322914820637567,
            max_relative = 2e-4
        );
        assert_relative_eq!(
            f2.phi_at(2.0, 1.0).unwrap(),
            0.017129646789916738,
            max_relative = 2e-4
        );
    }

    #[test]
    fn solve_agrees_with_direct_quadrature_of_psi() {
        // cross-check the cumulative scheme against the single-point adaptive
        // evaluation of ∂ᵤψ integrated in u: ψ(u,v) = ∫_{|v|}^u ∂ᵤψ(u',v) du'
        let s = lemma2_default_source();
        let grid = small_grid();
        let field = solve(&s, &grid);
        let (u, v) = (5.0, 2.0);
        let direct = integrate_1d(
            |up| du_psi(&s, NullPoint::new(up, v).unwrap(), 1e-12).unwrap().value,
            v,
            u,
            1e-10,
            &[],
        )
        .unwrap()
        .value;
        let t = 0.5 * (u + v);
        let r = 0.5 * (u - v);
        assert_relative_eq!(field.psi_at(t, r).unwrap(), direct, max_relative = 2e-4);
    }

    #[test]
    fn null_data_and_causality() {
        let grid = small_grid();
        let field = solve(&lemma1_default_source(), &grid);
        let iz = grid.zero_v_index();
        for i in 0..grid.n_u() {
            assert_eq!(field.psi_table()[(i, iz - i)], 0.0);
        }
        // t = 0 line and negative times
        assert_eq!(field.phi_at(0.0, 3.0), Some(0.0));
        assert_eq!(field.phi_at(-1.0, 0.5), Some(0.0));
        assert_eq!(field.psi_at(-0.2, 12.0), Some(0.0));
        // out of tabulated range or unphysical
        assert_eq!(field.phi_at(9.0, 0.0), None);
        assert_eq!(field.phi_at(1.0, -0.5), None);
        assert_eq!(field.phi_at(f64::NAN, 0.0), None);
    }

    #[test]
    fn positive_source_gives_positive_field() {
        let grid = small_grid();
        let field = solve(&lemma2_default_source(), &grid);
        let iz = grid.zero_v_index();
        for i in 0..grid.n_u() {
            for j in (iz - i)..=(iz + i) {
                assert!(field.phi_table()[(i, j)] >= 0.0);
                assert!(field.psi_table()[(i, j)] >= 0.0);
            }
        }
        assert!(field.is_finite());
    }

    #[test]
    fn near_axis_interpolation_uses_even_reflection() {
        // φ varies smoothly across r = 0; interpolation just off the axis
        // must stay near the axis value rather than dropping toward zero
        let grid = small_grid();
        let field = solve(&lemma1_default_source(), &grid);
        let on_axis = field.phi_at(2.0, 0.0).unwrap();
        let near = field.phi_at(2.0, 0.004).unwrap();
        assert_relative_eq!(near, on_axis, max_relative = 1e-2);
        // this query's cell straddles the diagonal: one corner is fictitious
        // (v-node above the u-node) and must come from the reflection, not 0
        let straddle = field.phi_at(2.0075, 0.0025).unwrap();
        let at_axis = field.phi_at(2.0075, 0.0).unwrap();
        assert_relative_eq!(straddle, at_axis, max_relative = 1e-2);
        // ψ = rφ is odd: tiny r gives tiny ψ of the right slope
        let psi_near = field.psi_at(2.0075, 0.0025).unwrap();
        assert_relative_eq!(psi_near, 0.0025 * at_axis, max_relative = 5e-2);
    }

    #[test]
    fn csv_export_shape_and_roundtrip() {
        let grid = CharGrid::from_u_nodes(vec![0.0, 0.5, 1.0]).unwrap();
        let field = solve(&RadialSource::constant(1.0), &grid);
        let mut buf = Vec::new();
        field.write_csv(&mut buf, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "u,v,t,r,psi,phi");
        // 1 + 3 + 5 nodes
        assert_eq!(lines.len(), 1 + 9);
        // every data row parses back to the tabulated values exactly
        for line in &lines[1..] {
            let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!(cols.len(), 6);
            let (u, v) = (cols[0], cols[1]);
            assert_eq!(cols[2], 0.5 * (u + v));
            assert_eq!(cols[3], 0.5 * (u - v));
        }
        // strided export still carries the axis nodes
        let mut buf = Vec::new();
        field.write_csv(&mut buf, 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().skip(1).any(|l| l.split(',').nth(3).unwrap() == "0"));
    }

    #[test]
    fn weighted_sup_is_deterministic_and_dominates_nodes() {
        let grid = small_grid();
        let field = solve(&lemma1_default_source(), &grid);
        let w = WeightExponents::new(2.0, 0.0).unwrap();
        let a = field.weighted_sup(w, 500, 1);
        let b = field.weighted_sup(w, 500, 1);
        assert_eq!(a.sup, b.sup);
        assert_eq!((a.argmax.t(), a.argmax.r()), (b.argmax.t(), b.argmax.r()));
        // Halton prefixes nest, so more samples can only raise the sup
        let c = field.weighted_sup(w, 2000, 1);
        assert!(c.sup >= a.sup);
        // a pure node scan is a lower bound
        let nodes_only = field.weighted_sup(w, 0, 1);
        assert!(a.sup >= nodes_only.sup);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn du_psi_linear_in_amplitude(a in 0.1..5.0f64) {
            let base = lemma1_default_source();
            let scaled = RadialSource::source_lemma1(
                DecayProfile::flat(a, 3.0, 2.0).unwrap()
            ).unwrap();
            let p = NullPoint::new(2.0, 0.5).unwrap();
            let f0 = du_psi(&base, p, 1e-12).unwrap().value;
            let fa = du_psi(&scaled, p, 1e-12).unwrap().value;
            prop_assert!((fa - a * f0).abs() <= 1e-9 * (1.0 + fa.abs()));
        }

        #[test]
        fn interpolation_stays_on_domain(t in 0.0..4.0f64, r in 0.0..4.0f64) {
            let grid = CharGrid::with_resolution(8.0, 16, 1.05, 10.0).unwrap();
            let field = solve(&RadialSource::constant(1.0), &grid);
            let got = field.phi_at(t, r);
            prop_assert!(got.is_some());
            let expect = 0.5 * t * t;
            prop_assert!((got.unwrap() - expect).abs() <= 5e-3 * (1.0 + expect));
        }
    }
}
