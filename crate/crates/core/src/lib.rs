//! Constructive solver and certification suite for pointwise decay of the
//! 3+1 wave equation with decaying sources.
//!
//! The crate solves □φ = F with vanishing data for radial sources, evaluates
//! the closed-form lemma constants that bound the solution's weighted
//! amplitude, and certifies the bound numerically: solve, scan, compare.
//! See the module docs for the individual pieces:
//!
//! * [`types`]: validated coordinates, weights, and decay profiles;
//! * [`quadrature`]: adaptive 1-D integration and the characteristic grid;
//! * [`radial`]: the reduced 1+1 solver on the characteristic triangle;
//! * [`bounds`]: lemma constants, inequality checks, decay certification;
//! * [`kirchhoff`]: the full 3-D representation formula, used to dominate
//!   non-radial sources by radial majorants;
//! * [`iteration`]: Picard iteration for the semilinear and potential
//!   perturbation problems.

pub mod bounds;
pub mod iteration;
pub mod kirchhoff;
pub mod quadrature;
pub mod radial;
pub mod types;

pub use bounds::{
    axis_decay_slope, check_du_psi_bound, check_elementary_inequality, check_i1_lemma1,
    check_i1_lemma2, check_i2_lemma1, check_i2_lemma2, check_min_tr_identity, closure_nonlinear,
    closure_potential, lemma1_constants, lemma2_constants, run_inequality_suite, verify_decay,
    BoundConstants, BoundsError, DecayReport, InequalityCheck, NonlinearClosure, PotentialClosure,
    SuiteFailure, SuiteReport, DECAY_SLACK,
};
pub use iteration::{
    picard_potential, picard_semilinear, picard_with_iterates, weighted_norm, IterationConfig,
    IterationError, IterationKind, IterationStep, IterationTrace,
};
pub use kirchhoff::{
    compare, compare_with, retarded_integral, retarded_integral_with, sample_points,
    ComparisonPoint, ComparisonReport, KirchhoffConfig, KirchhoffError, SphereRule,
    VolumetricSource,
};
pub use quadrature::{
    cumulative_triangle, gauss_legendre, halton_point, integrate_1d, integrate_1d_with_budget,
    integrate_to_infinity, CharGrid, GridError, QuadError, QuadResult, DEFAULT_EVAL_BUDGET,
    DEFAULT_SAMPLE_SEED,
};
pub use radial::{
    axis_value, du_psi, dv_psi, phi_pointwise, psi_pointwise, solve, RadialField, RadialSource,
    SupScan,
};
pub use types::{
    bracket, from_null, to_null, weighted_amplitude, DecayProfile, InvalidInput, NullPoint,
    SpacetimePoint, WeightExponents,
};
