//! Spacetime points, null coordinates, and decay-profile descriptors.
//!
//! Spherically symmetric fields live on the quarter plane t ≥ 0, r ≥ 0.
//! Null coordinates are
//!
//! ```text
//!   u = t + r,    v = t - r,
//! ```
//!
//! so the physical domain maps to the triangle u ≥ 0, |v| ≤ u. Weights are
//! built from the bracket `⟨x⟩ = 1 + |x|`; a decay profile
//! `A / (⟨r⟩^λ ⟨t+r⟩^p ⟨t-r⟩^q)` describes both source classes handled by the
//! solver (λ = 0 is the flat-weight case).
//!
//! Constructors validate eagerly: out-of-domain points and non-finite
//! parameters are rejected here, never clamped downstream.

use serde::Serialize;
use thiserror::Error;

/// Validation failure for domain or hypothesis constraints.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvalidInput {
    /// A named inequality on the inputs does not hold.
    #[error("requires {requirement} (got {got})")]
    Hypothesis {
        requirement: &'static str,
        got: f64,
    },
    /// A parameter is NaN or infinite.
    #[error("{field} must be finite (got {got})")]
    NonFinite { field: &'static str, got: f64 },
}

pub(crate) fn ensure_finite(field: &'static str, x: f64) -> Result<f64, InvalidInput> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(InvalidInput::NonFinite { field, got: x })
    }
}

/// Japanese bracket weight `⟨x⟩ = 1 + |x|`. Always ≥ 1; even in x.
#[inline]
pub fn bracket(x: f64) -> f64 {
    1.0 + x.abs()
}

/// A point of the physical quarter plane, t ≥ 0 and r ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacetimePoint {
    t: f64,
    r: f64,
}

impl SpacetimePoint {
    pub fn new(t: f64, r: f64) -> Result<Self, InvalidInput> {
        ensure_finite("t", t)?;
        ensure_finite("r", r)?;
        if t < 0.0 {
            return Err(InvalidInput::Hypothesis {
                requirement: "t >= 0",
                got: t,
            });
        }
        if r < 0.0 {
            return Err(InvalidInput::Hypothesis {
                requirement: "r >= 0",
                got: r,
            });
        }
        Ok(Self { t, r })
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn to_null(&self) -> NullPoint {
        to_null(*self)
    }
}

/// A point of the characteristic triangle u ≥ 0, |v| ≤ u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullPoint {
    u: f64,
    v: f64,
}

impl NullPoint {
    pub fn new(u: f64, v: f64) -> Result<Self, InvalidInput> {
        ensure_finite("u", u)?;
        ensure_finite("v", v)?;
        if u < 0.0 {
            return Err(InvalidInput::Hypothesis {
                requirement: "u >= 0",
                got: u,
            });
        }
        if v.abs() > u {
            return Err(InvalidInput::Hypothesis {
                requirement: "|v| <= u",
                got: v,
            });
        }
        Ok(Self { u, v })
    }

    #[inline]
    pub fn u(&self) -> f64 {
        self.u
    }

    #[inline]
    pub fn v(&self) -> f64 {
        self.v
    }

    #[inline]
    pub fn to_spacetime(&self) -> SpacetimePoint {
        from_null(*self)
    }
}

/// u = t + r, v = t - r. Exact in floating point up to one rounding each.
pub fn to_null(p: SpacetimePoint) -> NullPoint {
    // u >= |v| holds exactly: both sums round monotonically.
    NullPoint {
        u: p.t + p.r,
        v: p.t - p.r,
    }
}

/// t = (u+v)/2, r = (u-v)/2. The triangle invariant guarantees t, r ≥ 0.
pub fn from_null(np: NullPoint) -> SpacetimePoint {
    SpacetimePoint {
        t: 0.5 * (np.u + np.v),
        r: 0.5 * (np.u - np.v),
    }
}

/// Exponent pair (a, b) of the weight `⟨t+r⟩^a ⟨t-r⟩^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightExponents {
    pub a: f64,
    pub b: f64,
}

impl WeightExponents {
    pub fn new(a: f64, b: f64) -> Result<Self, InvalidInput> {
        ensure_finite("a", a)?;
        ensure_finite("b", b)?;
        Ok(Self { a, b })
    }
}

/// `|value| ⟨t+r⟩^a ⟨t-r⟩^b` at the given point.
pub fn weighted_amplitude(value: f64, p: SpacetimePoint, w: WeightExponents) -> f64 {
    value.abs() * bracket(p.t + p.r).powf(w.a) * bracket(p.t - p.r).powf(w.b)
}

/// Parameters (A, p, q, λ) of the source profile
/// `A / (⟨r⟩^λ ⟨t+r⟩^p ⟨t-r⟩^q)`; λ = 0 encodes the flat-weight form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayProfile {
    amplitude: f64,
    p: f64,
    q: f64,
    lambda: f64,
}

impl DecayProfile {
    pub fn new(amplitude: f64, p: f64, q: f64, lambda: f64) -> Result<Self, InvalidInput> {
        ensure_finite("amplitude", amplitude)?;
        ensure_finite("p", p)?;
        ensure_finite("q", q)?;
        ensure_finite("lambda", lambda)?;
        if amplitude <= 0.0 {
            return Err(InvalidInput::Hypothesis {
                requirement: "amplitude > 0",
                got: amplitude,
            });
        }
        if lambda < 0.0 {
            return Err(InvalidInput::Hypothesis {
                requirement: "lambda >= 0",
                got: lambda,
            });
        }
        Ok(Self {
            amplitude,
            p,
            q,
            lambda,
        })
    }

    /// Flat-weight profile (λ = 0).
    pub fn flat(amplitude: f64, p: f64, q: f64) -> Result<Self, InvalidInput> {
        Self::new(amplitude, p, q, 0.0)
    }

    #[inline]
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Profile value at (t, r). `⟨x⟩^0 = 1`, so λ = 0 costs nothing extra.
    pub fn value(&self, t: f64, r: f64) -> f64 {
        let mut denom = bracket(t + r).powf(self.p) * bracket(t - r).powf(self.q);
        if self.lambda != 0.0 {
            denom *= bracket(r).powf(self.lambda);
        }
        self.amplitude / denom
    }
}
