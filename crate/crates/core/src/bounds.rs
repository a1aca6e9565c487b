//! Explicit decay constants and numerical certification of the inequality
//! chains behind them.
//!
//! Two closed-form lemmas drive everything:
//!
//! * **Lemma 1** (flat profile, λ = 0): a source A ⟨t+r⟩^{-p} ⟨t-r⟩^{-q}
//!   with p > 2, q > 1 produces |φ| ≤ A C ⟨t+r⟩^{-1} ⟨t-r⟩^{-ν} with
//!
//!   ```text
//!     B = (1/8) (2/(q-1) + 1/((p-1)(p-2))),   C = 2B max(1, 1/(p-2)),
//!     ν = p - 2.
//!   ```
//!
//! * **Lemma 2** (radial factor, λ > 2): a source with the extra ⟨r⟩^{-λ}
//!   admits, for p > 0, q > 1, μ = min(q, λ-1),
//!
//!   ```text
//!     B = (1/8) (1 + 1/(q-1) + 4/(μ-1)),   C = 2B max(1, 1/(p+μ-1)),
//!     ν = p + μ - 1.
//!   ```
//!
//! [`lemma1_constants`] and [`lemma2_constants`] evaluate these and reject
//! out-of-hypothesis exponents by naming the failed inequality. The
//! `check_*` functions certify each intermediate inequality of the two
//! derivations by adaptive quadrature at concrete points, and
//! [`verify_decay`] compares a solved field's measured weighted sup against
//! an analytic constant. [`axis_decay_slope`] measures the empirical decay
//! exponent on the symmetry axis.
//!
//! Two deliberate deviations from the usual presentation of these chains,
//! kept explicit here:
//!
//! * the first lemma's second integral ∫ v'dv'/⟨v'⟩^q converges only for
//!   q > 2, so [`check_i2_lemma1`] is gated on q > 2 and its note records
//!   the exponent convention; the final ∂ᵤψ bound itself holds for all
//!   q > 1 and is certified separately ([`check_du_psi_bound`]);
//! * the final constant uses the explicit factor max(1, 1/(p+μ-1)), which
//!   exceeds the shorthand 2B when p+μ-1 < 1.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{halton_point, integrate_1d, QuadError};
use crate::radial::{du_psi, RadialField, RadialSource};
use crate::types::{
    bracket, from_null, DecayProfile, InvalidInput, NullPoint, SpacetimePoint, WeightExponents,
};

/// Multiplicative slack absorbing quadrature error when a measured sup is
/// compared against an analytic constant.
pub const DECAY_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Invalid(#[from] InvalidInput),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// The explicit constants of one decay lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    /// Bound constant for the weighted ∂ᵤψ estimate.
    pub b: f64,
    /// Final bound constant: |φ| ≤ A·C ⟨t+r⟩^{-1} ⟨t-r⟩^{-ν}.
    pub c: f64,
    /// Final ⟨t-r⟩ exponent.
    pub nu: f64,
    /// μ = min(q, λ-1); present only for the radial-factor lemma.
    pub mu: Option<f64>,
}

fn require(cond: bool, requirement: &'static str, got: f64) -> Result<(), InvalidInput> {
    if cond {
        Ok(())
    } else {
        Err(InvalidInput::Hypothesis { requirement, got })
    }
}

/// Constants of the flat-profile lemma. Requires p > 2, q > 1.
pub fn lemma1_constants(p: f64, q: f64) -> Result<BoundConstants, InvalidInput> {
    require(p.is_finite() && p > 2.0, "p > 2", p)?;
    require(q.is_finite() && q > 1.0, "q > 1", q)?;
    let b = 0.125 * (2.0 / (q - 1.0) + 1.0 / ((p - 1.0) * (p - 2.0)));
    let c = 2.0 * b * 1.0f64.max(1.0 / (p - 2.0));
    Ok(BoundConstants {
        b,
        c,
        nu: p - 2.0,
        mu: None,
    })
}

/// Constants of the radial-factor lemma. Requires p > 0, q > 1, λ > 2.
pub fn lemma2_constants(p: f64, q: f64, lambda: f64) -> Result<BoundConstants, InvalidInput> {
    require(p.is_finite() && p > 0.0, "p > 0", p)?;
    require(q.is_finite() && q > 1.0, "q > 1", q)?;
    require(lambda.is_finite() && lambda > 2.0, "lambda > 2", lambda)?;
    let mu = q.min(lambda - 1.0);
    debug_assert!(mu > 1.0, "mu > 1 is implied by q > 1, lambda > 2");
    let b = 0.125 * (1.0 + 1.0 / (q - 1.0) + 4.0 / (mu - 1.0));
    let nu = p + mu - 1.0;
    let c = 2.0 * b * 1.0f64.max(1.0 / nu);
    Ok(BoundConstants {
        b,
        c,
        nu,
        mu: Some(mu),
    })
}

/// Exponent choice closing the semilinear fixed-point argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearClosure {
    /// Optimal radial-decay exponent fed back into the iteration: λ = p - 2.
    pub lambda: f64,
    /// Constants of the flat lemma at (p, q) = (p, p(p-2)), the decay the
    /// p-th power of the bootstrap ansatz actually has.
    pub constants: BoundConstants,
}

/// Chooses λ = p - 2 for the semilinear problem □φ = |φ|^p.
///
/// Closure needs p(p-2) > 1 on top of p > 2, i.e. p > 1+√2.
pub fn closure_nonlinear(p: f64) -> Result<NonlinearClosure, InvalidInput> {
    require(
        p.is_finite() && p > 1.0 + std::f64::consts::SQRT_2,
        "p > 1+sqrt(2)",
        p,
    )?;
    let lambda = p - 2.0;
    let q = p * (p - 2.0);
    debug_assert!(p > 2.0 && q > 1.0);
    Ok(NonlinearClosure {
        lambda,
        constants: lemma1_constants(p, q)?,
    })
}

/// Exponent choice closing the potential fixed-point argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialClosure {
    /// Optimal ⟨t-r⟩ exponent of the bootstrap ansatz: q = λ.
    pub q: f64,
    /// Constants of the radial lemma at (p, q, λ) = (1, λ-1, λ): the decay
    /// of V·φₙ when φₙ carries the ansatz weights ⟨t+r⟩^{-1}⟨t-r⟩^{-(λ-1)}.
    pub constants: BoundConstants,
}

/// Chooses q = λ for the potential problem □φ = V φ, V ~ ⟨r⟩^{-λ}.
pub fn closure_potential(lambda: f64) -> Result<PotentialClosure, InvalidInput> {
    require(lambda.is_finite() && lambda > 2.0, "lambda > 2", lambda)?;
    let q = lambda;
    debug_assert!(q - 1.0 > 1.0);
    Ok(PotentialClosure {
        q,
        constants: lemma2_constants(1.0, lambda - 1.0, lambda)?,
    })
}

/// One certified inequality: lhs ≤ rhs with the evaluated values kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self {
            name,
            lhs,
            rhs,
            pass: lhs <= rhs,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

const QUAD_TOL: f64 = 1e-11;

/// First integral of the flat-lemma chain:
/// I₁ = ∫_{-u}^{v} dv'/⟨v'⟩^q ≤ 2/(q-1).
pub fn check_i1_lemma1(u: f64, v: f64, q: f64, tol: f64) -> Result<InequalityCheck, BoundsError> {
    let p = NullPoint::new(u, v)?;
    require(q.is_finite() && q > 1.0, "q > 1", q)?;
    require(tol.is_finite() && tol >= 0.0, "tol >= 0", tol)?;
    let i1 = integrate_1d(|x| bracket(x).powf(-q), -p.u(), p.v(), QUAD_TOL, &[0.0])?.value;
    Ok(InequalityCheck::new("I1_lemma1", i1, 2.0 / (q - 1.0) + tol))
}

/// Second integral of the flat-lemma chain, plus the cancellation that
/// precedes it. Gated on q > 2, where the tail integral converges:
///
/// ```text
///   ∫_{-|v|}^{|v|} v' dv'/⟨v'⟩^q = 0   (odd integrand)
///   I₂ = ∫_{|v|}^{u} v' dv'/⟨v'⟩^q ≤ 1/((q-1)(q-2))
/// ```
pub fn check_i2_lemma1(
    u: f64,
    v: f64,
    q: f64,
    tol: f64,
) -> Result<Vec<InequalityCheck>, BoundsError> {
    let p = NullPoint::new(u, v)?;
    require(q.is_finite() && q > 2.0, "q > 2", q)?;
    require(tol.is_finite() && tol >= 0.0, "tol >= 0", tol)?;
    let va = p.v().abs();
    let odd = integrate_1d(|x| x * bracket(x).powf(-q), -va, va, QUAD_TOL, &[0.0])?.value;
    let i2 = integrate_1d(|x| x * bracket(x).powf(-q), va, p.u(), QUAD_TOL, &[])?.value;
    let bound = 1.0 / ((q - 1.0) * (q - 2.0));
    Ok(vec![
        InequalityCheck::new("I2_lemma1_cancellation", odd.abs(), tol.max(1e-9)),
        InequalityCheck::new("I2_lemma1", i2, bound + tol).with_note(
            "tail integral converges only for q > 2; the bound uses the integrand's own \
             exponent q, written elsewhere with the companion exponent p",
        ),
    ])
}

/// The pointwise inequality 1 - x^ν ≤ max(1, ν)(1 - x) on 0 ≤ x ≤ 1.
pub fn check_elementary_inequality(nu: f64, x: f64) -> Result<InequalityCheck, BoundsError> {
    require(nu.is_finite() && nu > 0.0, "nu > 0", nu)?;
    require((0.0..=1.0).contains(&x), "0 <= x <= 1", x)?;
    Ok(InequalityCheck::new(
        "one_minus_power",
        1.0 - x.powf(nu),
        1.0f64.max(nu) * (1.0 - x) + 1e-15,
    ))
}

/// The weight identity 1 - ⟨v⟩/⟨u⟩ = 2 min(t, r)/⟨u⟩ on the triangle
/// (equality, certified to round-off).
pub fn check_min_tr_identity(point: SpacetimePoint) -> InequalityCheck {
    let (t, r) = (point.t(), point.r());
    let u = t + r;
    let v = t - r;
    let lhs = 1.0 - bracket(v) / bracket(u);
    let rhs = 2.0 * t.min(r) / bracket(u);
    InequalityCheck::new("min_tr_identity", (lhs - rhs).abs(), 1e-12 * (1.0 + rhs))
}

/// First integral of the radial-factor chain:
/// I₁ = ∫₀^{u} dv'/(⟨u+v'⟩^{λ-1} ⟨v'⟩^q) ≤ (1/(q-1)) ⟨u⟩^{-(λ-1)}.
pub fn check_i1_lemma2(
    u: f64,
    v: f64,
    q: f64,
    lambda: f64,
    tol: f64,
) -> Result<InequalityCheck, BoundsError> {
    let p = NullPoint::new(u, v)?;
    require(q.is_finite() && q > 1.0, "q > 1", q)?;
    require(lambda.is_finite() && lambda > 2.0, "lambda > 2", lambda)?;
    require(tol.is_finite() && tol >= 0.0, "tol >= 0", tol)?;
    let u = p.u();
    let i1 = integrate_1d(
        |x| bracket(u + x).powf(1.0 - lambda) * bracket(x).powf(-q),
        0.0,
        u,
        QUAD_TOL,
        &[],
    )?
    .value;
    let bound = bracket(u).powf(1.0 - lambda) / (q - 1.0);
    Ok(InequalityCheck::new("I1_lemma2", i1, bound + tol))
}

/// Second integral of the radial-factor chain:
/// I₂ = ∫₀^{|v|} dv'/(⟨u-v'⟩^{λ-1} ⟨v'⟩^q) ≤ (4/(μ-1) + 1) ⟨u⟩^{-μ},
/// μ = min(q, λ-1).
pub fn check_i2_lemma2(
    u: f64,
    v: f64,
    q: f64,
    lambda: f64,
    tol: f64,
) -> Result<InequalityCheck, BoundsError> {
    let p = NullPoint::new(u, v)?;
    require(q.is_finite() && q > 1.0, "q > 1", q)?;
    require(lambda.is_finite() && lambda > 2.0, "lambda > 2", lambda)?;
    require(tol.is_finite() && tol >= 0.0, "tol >= 0", tol)?;
    let (u, va) = (p.u(), p.v().abs());
    let mu = q.min(lambda - 1.0);
    let i2 = integrate_1d(
        |x| bracket(u - x).powf(1.0 - lambda) * bracket(x).powf(-q),
        0.0,
        va,
        QUAD_TOL,
        // the midpoint u/2 marks where the two bracket factors trade dominance
        &[0.5 * u],
    )?
    .value;
    let bound = (4.0 / (mu - 1.0) + 1.0) * bracket(u).powf(-mu);
    Ok(InequalityCheck::new("I2_lemma2", i2, bound + tol))
}

/// End-to-end flat-lemma estimate at one point: for a λ = 0 profile,
/// ∂ᵤψ(u, v) ≤ A·B ⟨u⟩^{-(p-1)}. Holds for every q > 1 even though the
/// intermediate I₂ check needs q > 2.
pub fn check_du_psi_bound(
    profile: DecayProfile,
    u: f64,
    v: f64,
    tol: f64,
) -> Result<InequalityCheck, BoundsError> {
    let point = NullPoint::new(u, v)?;
    require(tol.is_finite() && tol >= 0.0, "tol >= 0", tol)?;
    let constants = lemma1_constants(profile.p(), profile.q())?;
    let src = RadialSource::source_lemma1(profile)?;
    let lhs = du_psi(&src, point, QUAD_TOL)?.value.abs();
    let rhs = profile.amplitude() * constants.b * bracket(point.u()).powf(1.0 - profile.p());
    Ok(InequalityCheck::new("du_psi_weighted", lhs, rhs + tol))
}

/// Flattened argmax location inside a [`DecayReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgmaxPoint {
    pub t: f64,
    pub r: f64,
}

/// Outcome of comparing a solved field against an analytic constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub exponents: WeightExponents,
    pub measured_sup: f64,
    #[serde(rename = "analytic_C")]
    pub analytic_c: f64,
    /// analytic_C - measured_sup; negative when the bound is violated.
    pub margin: f64,
    pub argmax: ArgmaxPoint,
    /// Off-grid quasi-random samples scanned (grid nodes always included).
    pub samples: usize,
    /// Start offset of the quasi-random sequence, echoed for reproducibility.
    pub seed: u64,
    pub pass: bool,
}

/// Measure sup |φ| ⟨t+r⟩^a ⟨t-r⟩^b over the field and compare with
/// `analytic_c`. Passes when measured_sup ≤ analytic_c·(1 + [`DECAY_SLACK`]),
/// absorbing the solver's quadrature error.
pub fn verify_decay(
    field: &RadialField,
    w: WeightExponents,
    analytic_c: f64,
    samples: usize,
    seed: u64,
) -> Result<DecayReport, BoundsError> {
    require(analytic_c.is_finite() && analytic_c > 0.0, "analytic_C > 0", analytic_c)?;
    let scan = field.weighted_sup(w, samples, seed);
    if !scan.sup.is_finite() {
        return Err(BoundsError::Numerical(format!(
            "weighted sup is not finite (got {}) - the field contains invalid values",
            scan.sup
        )));
    }
    Ok(DecayReport {
        exponents: w,
        measured_sup: scan.sup,
        analytic_c,
        margin: analytic_c - scan.sup,
        argmax: ArgmaxPoint {
            t: scan.argmax.t(),
            r: scan.argmax.r(),
        },
        samples,
        seed,
        pass: scan.sup <= analytic_c * (1.0 + DECAY_SLACK),
    })
}

/// Least-squares slope of log |φ(t, 0)| against log t over the axis nodes
/// with t ∈ [t_min, t_max]. The measured decay exponent of the field.
pub fn axis_decay_slope(
    field: &RadialField,
    t_min: f64,
    t_max: f64,
) -> Result<f64, BoundsError> {
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(BoundsError::Numerical(format!(
            "slope window must satisfy 0 < t_min < t_max (got [{t_min}, {t_max}])"
        )));
    }
    let grid = field.grid();
    let iz = grid.zero_v_index();
    let phi = field.phi_table();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &u) in grid.u_nodes().iter().enumerate() {
        // axis nodes sit on the diagonal v = u, where t = u and r = 0
        if u < t_min || u > t_max {
            continue;
        }
        let val = phi[(i, iz + i)].abs();
        if !(val.is_finite() && val > 0.0) {
            return Err(BoundsError::Numerical(format!(
                "axis value at t = {u} is {val}; cannot take logarithms"
            )));
        }
        xs.push(u.ln());
        ys.push(val.ln());
    }
    if xs.len() < 2 {
        return Err(BoundsError::Numerical(format!(
            "slope window [{t_min}, {t_max}] contains {} axis nodes; need at least 2",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    Ok(sxy / sxx)
}

/// One failed check of the sweep, with the sampled tuple that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteFailure {
    pub sample: usize,
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub check: InequalityCheck,
}

/// Outcome of [`run_inequality_suite`].
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub checks_run: usize,
    pub failures: Vec<SuiteFailure>,
    pub pass: bool,
}

/// Sweep every intermediate inequality over quasi-random admissible tuples.
///
/// Each sample draws (u, v, p, q, lambda) from Halton bases (2, 3, 5, 7, 11):
/// u log-spread over [0, 10^3), |v| <= u, p in (2, 6], q in (1, 6],
/// lambda in (2, 6]. Per tuple it runs both I1 checks, both I2 checks (the
/// flat-lemma one and the source-bound chain gated on q > 2, where the
/// integrals converge), the elementary inequality at nu = p - 2, and the
/// min(t, r) identity. `tol` is the additive slack granted to each bound.
/// Samples run in parallel; failures are reported in sample order.
pub fn run_inequality_suite(
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<SuiteReport, BoundsError> {
    require(samples >= 1, "samples >= 1", samples as f64)?;
    require(tol.is_finite() && tol >= 0.0, "tol >= 0", tol)?;
    let per_sample = |k: usize| -> Result<(usize, Vec<SuiteFailure>), BoundsError> {
        let s = halton_point(seed, k as u64, &[2, 3, 5, 7, 11]);
        let u = 10f64.powf(3.0 * s[0]) - 1.0;
        let v = u * (2.0 * s[1] - 1.0);
        let p = 2.05 + 3.95 * s[2];
        let q = 1.05 + 4.95 * s[3];
        let lambda = 2.05 + 3.95 * s[4];

        let mut checks = vec![
            check_i1_lemma1(u, v, q, tol)?,
            check_elementary_inequality(p - 2.0, s[2])?,
            check_min_tr_identity(from_null(NullPoint::new(u, v)?)),
            check_i1_lemma2(u, v, q, lambda, tol)?,
            check_i2_lemma2(u, v, q, lambda, tol)?,
        ];
        if q > 2.0 {
            checks.extend(check_i2_lemma1(u, v, q, tol)?);
            let profile = DecayProfile::new(1.0, p, q, 0.0)?;
            checks.push(check_du_psi_bound(profile, u, v, tol)?);
        }
        let run = checks.len();
        let failures = checks
            .into_iter()
            .filter(|c| !c.pass)
            .map(|check| SuiteFailure {
                sample: k,
                u,
                v,
                p,
                q,
                lambda,
                check,
            })
            .collect();
        Ok((run, failures))
    };
    let per: Vec<(usize, Vec<SuiteFailure>)> = (0..samples)
        .into_par_iter()
        .map(per_sample)
        .collect::<Result<_, _>>()?;
    let checks_run = per.iter().map(|(n, _)| n).sum();
    let failures: Vec<SuiteFailure> = per.into_iter().flat_map(|(_, f)| f).collect();
    let pass = failures.is_empty();
    Ok(SuiteReport {
        samples,
        seed,
        tol,
        checks_run,
        failures,
        pass,
    })
}
