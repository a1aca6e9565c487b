//! Retarded-potential oracle in full 3+1 dimensions and the comparison
//! harness built on it.
//!
//! The characteristic solver in [`crate::radial`] only handles spherically
//! symmetric sources. For arbitrary sources the solution with vanishing
//! initial data is the classical retarded potential, which after collapsing
//! the volume integral into spheres around the observation point reads
//!
//! ```text
//! phi(t, x) = int_0^t rho * mean_{|w| = 1} F(t - rho, x + rho w) drho
//! ```
//!
//! The 1/|y - x| kernel singularity cancels against the sphere area, so the
//! radial integrand is bounded down to rho = 0 and ordinary adaptive
//! quadrature applies. Sphere means use a fixed-degree product rule; the
//! adaptivity budget goes to the rho direction, where decaying profiles vary
//! fastest. This is an oracle for cross-checking the characteristic solver
//! and the domination principle at a few hundred points, not a production
//! solver: one point costs O(shells x points-per-shell) source evaluations.
//!
//! The comparison harness pairs a source with a spherically symmetric
//! majorant. Because the wave-equation inverse has a positive kernel,
//! |F(t, x)| <= G(t, |x|) forces |phi_F| <= phi_G pointwise; [`compare`]
//! measures exactly that, and refuses to run until the hypothesis itself
//! has been sample-checked by [`VolumetricSource::verify_majorant`].

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{
    gauss_legendre, halton_point, integrate_1d_with_budget, QuadError, QuadResult,
};
use crate::radial::{RadialField, RadialSource};
use crate::types::InvalidInput;

/// Failures of the 3D oracle or of the comparison harness.
#[derive(Debug, Error)]
pub enum KirchhoffError {
    #[error(transparent)]
    Invalid(#[from] InvalidInput),
    #[error(transparent)]
    Quad(#[from] QuadError),
    /// The claimed majorant fails at a sampled point (witness attached).
    #[error("majorant violated at t = {t}, x = {x:?}: |F| = {f_abs} exceeds G = {g}")]
    MajorantViolation {
        t: f64,
        x: [f64; 3],
        f_abs: f64,
        g: f64,
    },
    /// [`compare`] was called before the majorant hypothesis was checked.
    #[error("majorant not verified; run verify_majorant before compare")]
    UnverifiedMajorant,
    /// A comparison point lies outside the solved majorant field.
    #[error("point (t = {t}, r = {r}) is outside the majorant field's grid")]
    OutOfDomain { t: f64, r: f64 },
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Right-handed orthonormal frame whose third axis points along `center`
/// (along e_z when `center` is the origin).
fn orthonormal_frame(center: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let n = norm(center);
    let e3 = if n > 0.0 {
        [center[0] / n, center[1] / n, center[2] / n]
    } else {
        [0.0, 0.0, 1.0]
    };
    // seed with the coordinate axis least aligned with e3: keeps the
    // projection step well conditioned for every center
    let mut j = 0;
    if e3[1].abs() < e3[j].abs() {
        j = 1;
    }
    if e3[2].abs() < e3[j].abs() {
        j = 2;
    }
    let mut e1 = [0.0; 3];
    e1[j] = 1.0;
    let d = e1[0] * e3[0] + e1[1] * e3[1] + e1[2] * e3[2];
    for i in 0..3 {
        e1[i] -= d * e3[i];
    }
    let n1 = norm(e1);
    for c in &mut e1 {
        *c /= n1;
    }
    let e2 = [
        e3[1] * e1[2] - e3[2] * e1[1],
        e3[2] * e1[0] - e3[0] * e1[2],
        e3[0] * e1[1] - e3[1] * e1[0],
    ];
    (e1, e2, e3)
}

/// Fixed-degree quadrature for means over spheres.
///
/// Product of Gauss-Legendre in the polar cosine with a midpoint rule in
/// azimuth, exact for spherical harmonics of degree up to
/// `min(2 n_polar - 1, n_azimuth - 1)`. [`SphereRule::mean`] aligns the
/// polar axis with the sphere's center direction, so an integrand that only
/// depends on the distance to the origin varies along the high-order
/// Gauss-Legendre direction and is constant in azimuth.
#[derive(Debug, Clone)]
pub struct SphereRule {
    cos_polar: Vec<f64>,
    polar_weights: Vec<f64>,
    azimuth: Vec<(f64, f64)>,
}

impl SphereRule {
    /// Build the product rule; both counts must give degree >= 11.
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self, InvalidInput> {
        if n_polar < 6 {
            return Err(InvalidInput::Hypothesis {
                requirement: "n_polar >= 6",
                got: n_polar as f64,
            });
        }
        if n_azimuth < 12 {
            return Err(InvalidInput::Hypothesis {
                requirement: "n_azimuth >= 12",
                got: n_azimuth as f64,
            });
        }
        let (cos_polar, polar_weights) = gauss_legendre(n_polar);
        let azimuth = (0..n_azimuth)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_azimuth as f64;
                (phi.cos(), phi.sin())
            })
            .collect();
        Ok(SphereRule {
            cos_polar,
            polar_weights,
            azimuth,
        })
    }

    /// Largest spherical-harmonic degree integrated exactly.
    pub fn degree(&self) -> usize {
        (2 * self.cos_polar.len() - 1).min(self.azimuth.len() - 1)
    }

    /// Source evaluations per shell.
    pub fn points_per_shell(&self) -> usize {
        self.cos_polar.len() * self.azimuth.len()
    }

    /// Average of `f` over the sphere of radius `radius` about `center`.
    pub fn mean<F: Fn([f64; 3]) -> f64>(&self, center: [f64; 3], radius: f64, f: F) -> f64 {
        let (e1, e2, e3) = orthonormal_frame(center);
        let mut acc = 0.0;
        for (&c, &w) in self.cos_polar.iter().zip(&self.polar_weights) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let mut ring = 0.0;
            for &(ca, sa) in &self.azimuth {
                let mut y = [0.0; 3];
                for i in 0..3 {
                    let omega = s * (ca * e1[i] + sa * e2[i]) + c * e3[i];
                    y[i] = center[i] + radius * omega;
                }
                ring += f(y);
            }
            acc += w * ring;
        }
        // Gauss-Legendre weights sum to 2 and the ring sum carries a 1/m.
        acc / (2.0 * self.azimuth.len() as f64)
    }
}

/// Tuning for [`retarded_integral_with`].
#[derive(Debug, Clone)]
pub struct KirchhoffConfig {
    /// Gauss-Legendre nodes in the polar cosine (at least 6).
    pub n_polar: usize,
    /// Uniform azimuth samples per polar node (at least 12).
    pub n_azimuth: usize,
    /// Budget of shell-mean evaluations for the radial quadrature. One
    /// shell costs `n_polar * n_azimuth` source evaluations.
    pub shell_budget: usize,
}

impl Default for KirchhoffConfig {
    fn default() -> Self {
        KirchhoffConfig {
            n_polar: 48,
            n_azimuth: 16,
            shell_budget: 40_000,
        }
    }
}

impl KirchhoffConfig {
    /// The sphere rule this config describes.
    pub fn rule(&self) -> Result<SphereRule, InvalidInput> {
        SphereRule::new(self.n_polar, self.n_azimuth)
    }
}

/// A source F(t, x) on 3+1 spacetime paired with a claimed spherically
/// symmetric majorant G(t, r).
///
/// The pair carries a verification flag: [`compare`] refuses to certify the
/// domination |phi_F| <= phi_G until |F(t, x)| <= G(t, |x|) has been
/// sample-checked, since the conclusion is only as good as that hypothesis.
#[derive(Clone)]
pub struct VolumetricSource {
    f: Arc<dyn Fn(f64, [f64; 3]) -> f64 + Send + Sync>,
    majorant: RadialSource,
    verified: bool,
}

impl fmt::Debug for VolumetricSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolumetricSource")
            .field("verified", &self.verified)
            .finish_non_exhaustive()
    }
}

impl VolumetricSource {
    /// Pair an arbitrary source with a claimed, not yet verified, majorant.
    pub fn new<F>(f: F, majorant: RadialSource) -> Self
    where
        F: Fn(f64, [f64; 3]) -> f64 + Send + Sync + 'static,
    {
        VolumetricSource {
            f: Arc::new(f),
            majorant,
            verified: false,
        }
    }

    /// Wrap a spherically symmetric source. Its absolute value majorizes it
    /// at every point, not just on samples, so the pair is born verified.
    pub fn from_radial(src: &RadialSource) -> Self {
        let g = src.clone();
        let a = src.clone();
        VolumetricSource {
            f: Arc::new(move |t, x| g.eval(t, norm(x))),
            majorant: RadialSource::from_fn(move |t, r| a.eval(t, r).abs()),
            verified: true,
        }
    }

    pub fn eval(&self, t: f64, x: [f64; 3]) -> f64 {
        (self.f)(t, x)
    }

    pub fn majorant(&self) -> &RadialSource {
        &self.majorant
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    /// Check |F(t, x)| <= G(t, |x|) on quasi-random samples of the cone
    /// t in [0, t_max], |x| <= r_max, and set the verification flag.
    ///
    /// Fails with the violation of smallest sample index as witness, so the
    /// reported point is reproducible for a given seed.
    pub fn verify_majorant(
        &mut self,
        t_max: f64,
        r_max: f64,
        samples: usize,
        seed: u64,
    ) -> Result<(), KirchhoffError> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(InvalidInput::Hypothesis {
                requirement: "t_max > 0",
                got: t_max,
            }
            .into());
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(InvalidInput::Hypothesis {
                requirement: "r_max > 0",
                got: r_max,
            }
            .into());
        }
        if samples == 0 {
            return Err(InvalidInput::Hypothesis {
                requirement: "samples > 0",
                got: 0.0,
            }
            .into());
        }
        let witness = (0..samples as u64)
            .into_par_iter()
            .filter_map(|k| {
                let (t, x) = ball_point(seed, k, t_max, r_max);
                let f_abs = self.eval(t, x).abs();
                let g = self.majorant.eval(t, norm(x));
                // slack covers rounding only; saturated majorants (|F| = G)
                // must pass
                if f_abs > g * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                    Some((k, t, x, f_abs, g))
                } else {
                    None
                }
            })
            .min_by_key(|&(k, ..)| k);
        match witness {
            Some((_, t, x, f_abs, g)) => Err(KirchhoffError::MajorantViolation { t, x, f_abs, g }),
            None => {
                self.verified = true;
                Ok(())
            }
        }
    }
}

/// Quasi-random point of the truncated cone: Halton bases (2, 3, 5, 7) map
/// to time, polar cosine, azimuth, and a volume-uniform ball radius.
fn ball_point(seed: u64, k: u64, t_max: f64, r_max: f64) -> (f64, [f64; 3]) {
    let s = halton_point(seed, k, &[2, 3, 5, 7]);
    let t = s[0] * t_max;
    let c = 2.0 * s[1] - 1.0;
    let phi = 2.0 * std::f64::consts::PI * s[2];
    let rho = r_max * s[3].cbrt();
    let sn = (1.0 - c * c).max(0.0).sqrt();
    (t, [rho * sn * phi.cos(), rho * sn * phi.sin(), rho * c])
}

/// Deterministic quasi-random evaluation points for comparison runs.
pub fn sample_points(n: usize, t_max: f64, r_max: f64, seed: u64) -> Vec<(f64, [f64; 3])> {
    (0..n as u64)
        .map(|k| ball_point(seed, k, t_max, r_max))
        .collect()
}

/// Retarded-potential solution at one spacetime point, default tuning.
pub fn retarded_integral(
    src: &VolumetricSource,
    t: f64,
    x: [f64; 3],
    tol: f64,
) -> Result<QuadResult, KirchhoffError> {
    retarded_integral_with(&KirchhoffConfig::default(), src, t, x, tol)
}

/// Retarded-potential solution at one spacetime point.
///
/// Integrates `rho * mean F(t - rho, .)` over shell radii `rho in [0, t]`
/// to absolute tolerance `tol`. The retarded sphere sweeps past the spatial
/// origin at `rho = |x|` and past the light cone of a decaying profile at
/// `rho = (t -+ |x|) / 2`; those radii seed the adaptive subdivision.
/// `result.evaluations` counts shells, not source evaluations.
pub fn retarded_integral_with(
    cfg: &KirchhoffConfig,
    src: &VolumetricSource,
    t: f64,
    x: [f64; 3],
    tol: f64,
) -> Result<QuadResult, KirchhoffError> {
    if !t.is_finite() {
        return Err(InvalidInput::NonFinite { field: "t", got: t }.into());
    }
    if let Some(&bad) = x.iter().find(|c| !c.is_finite()) {
        return Err(InvalidInput::NonFinite {
            field: "x",
            got: bad,
        }
        .into());
    }
    if t < 0.0 {
        return Err(InvalidInput::Hypothesis {
            requirement: "t >= 0",
            got: t,
        }
        .into());
    }
    if t == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let rule = cfg.rule()?;
    let r = norm(x);
    let kinks: Vec<f64> = [0.5 * (t - r), 0.5 * (t + r), r]
        .into_iter()
        .filter(|&k| k > 0.0 && k < t)
        .collect();
    let shell = |rho: f64| rho * rule.mean(x, rho, |y| src.eval(t - rho, y));
    integrate_1d_with_budget(shell, 0.0, t, tol, &kinks, cfg.shell_budget).map_err(Into::into)
}

/// One comparison sample: 3D solution against the radial dominator.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonPoint {
    pub t: f64,
    pub x: [f64; 3],
    pub phi1: f64,
    pub phi2: f64,
    /// `phi2 + tol - |phi1|`; negative means domination failed here.
    pub margin: f64,
}

/// Outcome of a comparison run; `violations` indexes into `points`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub points: Vec<ComparisonPoint>,
    pub violations: Vec<usize>,
    pub tol: f64,
    pub pass: bool,
}

/// [`compare_with`] under the default oracle tuning.
pub fn compare(
    src: &VolumetricSource,
    majorant_field: &RadialField,
    points: &[(f64, [f64; 3])],
    tol: f64,
    quad_tol: f64,
) -> Result<ComparisonReport, KirchhoffError> {
    compare_with(
        &KirchhoffConfig::default(),
        src,
        majorant_field,
        points,
        tol,
        quad_tol,
    )
}

/// Check |phi_F(t, x)| <= phi_G(t, |x|) + tol at each point.
///
/// `majorant_field` must be the characteristic solution of the paired
/// majorant, solved on a grid covering every point; `phi1` comes from the
/// 3D oracle at absolute tolerance `quad_tol`, `phi2` from grid
/// interpolation. Points evaluate in parallel; the report preserves input
/// order. Requires a verified majorant.
pub fn compare_with(
    cfg: &KirchhoffConfig,
    src: &VolumetricSource,
    majorant_field: &RadialField,
    points: &[(f64, [f64; 3])],
    tol: f64,
    quad_tol: f64,
) -> Result<ComparisonReport, KirchhoffError> {
    if !src.verified {
        return Err(KirchhoffError::UnverifiedMajorant);
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(InvalidInput::Hypothesis {
            requirement: "tol >= 0",
            got: tol,
        }
        .into());
    }
    let rows: Result<Vec<ComparisonPoint>, KirchhoffError> = points
        .par_iter()
        .map(|&(t, x)| {
            let phi1 = retarded_integral_with(cfg, src, t, x, quad_tol)?.value;
            let r = norm(x);
            let phi2 = majorant_field
                .phi_at(t, r)
                .ok_or(KirchhoffError::OutOfDomain { t, r })?;
            Ok(ComparisonPoint {
                t,
                x,
                phi1,
                phi2,
                margin: phi2 + tol - phi1.abs(),
            })
        })
        .collect();
    let points = rows?;
    let violations: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.margin < 0.0)
        .map(|(i, _)| i)
        .collect();
    let pass = violations.is_empty();
    Ok(ComparisonReport {
        points,
        violations,
        tol,
        pass,
    })
}
