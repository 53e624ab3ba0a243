//! Warped-product profiles of the three simply-connected space forms and the
//! planar conformal charts used by the mesh solver.
//!
//! In geodesic polar coordinates every model carries the metric
//! `g = dr² + h(r)² g_sphere` with `h = r`, `sinh r` or `sin r`. For the
//! two-dimensional solver each model is also realised as a conformal chart
//! `λ(x)² |dx|²`: the plane (K = 0), the Poincaré disk (K = −1) and the
//! stereographic image of the upper hemisphere, which is the unit disk (K = +1).

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance kept from the equator of the hemisphere.
pub const DEFAULT_CAP_MARGIN: f64 = 1e-2;

/// Sectional curvature, normalised to one of the three admissible values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Curvature {
    Hyperbolic,
    Flat,
    Spherical,
}

impl Curvature {
    pub const ALL: [Curvature; 3] = [Curvature::Hyperbolic, Curvature::Flat, Curvature::Spherical];

    pub fn value(self) -> f64 {
        match self {
            Curvature::Hyperbolic => -1.0,
            Curvature::Flat => 0.0,
            Curvature::Spherical => 1.0,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Curvature::Hyperbolic => -1,
            Curvature::Flat => 0,
            Curvature::Spherical => 1,
        }
    }

    /// Largest admissible geodesic radius (exclusive), if any.
    pub fn radius_limit(self) -> Option<f64> {
        match self {
            Curvature::Spherical => Some(FRAC_PI_2),
            _ => None,
        }
    }

    /// Checks that a geodesic radius stays inside the hemisphere cap `π/2 − margin`.
    pub fn check_cap(self, radius: f64, margin: f64) -> Result<()> {
        if let Some(limit) = self.radius_limit() {
            if radius > limit - margin {
                return Err(Error::InvalidDomain(format!(
                    "geodesic radius {radius} exceeds hemisphere cap π/2 − {margin}"
                )));
            }
        }
        Ok(())
    }
}

impl TryFrom<i64> for Curvature {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        match value {
            -1 => Ok(Curvature::Hyperbolic),
            0 => Ok(Curvature::Flat),
            1 => Ok(Curvature::Spherical),
            _ => Err(Error::Domain("K must be -1, 0, or 1".into())),
        }
    }
}

impl From<Curvature> for i64 {
    fn from(k: Curvature) -> i64 {
        k.as_int()
    }
}

impl fmt::Display for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_int())
    }
}

/// A space form of curvature `K` and dimension `n ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceForm {
    pub curvature: Curvature,
    pub dim: usize,
}

impl SpaceForm {
    pub fn new(curvature: Curvature, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {dim}")));
        }
        Ok(Self { curvature, dim })
    }

    pub fn k(&self) -> f64 {
        self.curvature.value()
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    pub fn profile(&self, r: f64) -> Result<Profile> {
        profile_eval(self.curvature, r)
    }

    /// Area of the unit sphere `S^{n-1}`.
    pub fn sphere_area(&self) -> f64 {
        unit_sphere_area(self.dim)
    }
}

/// Values of the warping profile at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    /// `h(r)`
    pub h: f64,
    /// `ḣ(r)`
    pub dh: f64,
    /// `ḧ(r)`
    pub ddh: f64,
    /// `H(r) = ∫₀ʳ h`
    pub integral: f64,
}

/// Evaluates `(h, ḣ, ḧ, H)` for the given curvature at geodesic radius `r`.
pub fn profile_eval(k: Curvature, r: f64) -> Result<Profile> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be finite and non-negative, got {r}")));
    }
    if k == Curvature::Spherical && r >= FRAC_PI_2 {
        return Err(Error::Domain(format!("radius {r} is outside the open hemisphere")));
    }
    Ok(profile_unchecked(k, r))
}

/// Closed-form profile without range checks.
///
/// `H` uses the half-angle forms `2 sinh²(r/2)` and `2 sin²(r/2)` so it keeps
/// full relative accuracy near the pole.
#[inline]
pub(crate) fn profile_unchecked(k: Curvature, r: f64) -> Profile {
    match k {
        Curvature::Flat => Profile { h: r, dh: 1.0, ddh: 0.0, integral: 0.5 * r * r },
        Curvature::Hyperbolic => {
            let (s, c) = (r.sinh(), r.cosh());
            let half = (0.5 * r).sinh();
            Profile { h: s, dh: c, ddh: s, integral: 2.0 * half * half }
        }
        Curvature::Spherical => {
            let (s, c) = r.sin_cos();
            let half = (0.5 * r).sin();
            Profile { h: s, dh: c, ddh: -s, integral: 2.0 * half * half }
        }
    }
}

/// Area of the unit sphere `S^{n-1} ⊂ ℝⁿ`, via `|S^{m+1}| = 2π |S^{m-1}| / m`.
pub fn unit_sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

fn model_norm(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

/// Conformal factor `λ` of the 2-D chart at the model point `x`.
///
/// The hemisphere chart accepts the closed unit disk (its boundary is the equator).
pub fn conformal_factor(k: Curvature, x: [f64; 2]) -> Result<f64> {
    let s = model_norm(x);
    check_model_radius(k, s)?;
    Ok(conformal_factor_at(k, s))
}

#[inline]
pub(crate) fn conformal_factor_at(k: Curvature, s: f64) -> f64 {
    match k {
        Curvature::Flat => 1.0,
        Curvature::Hyperbolic => 2.0 / (1.0 - s * s),
        Curvature::Spherical => 2.0 / (1.0 + s * s),
    }
}

/// `λ²` at a model point, without range checks.
#[inline]
pub(crate) fn conformal_weight(k: Curvature, x: [f64; 2]) -> f64 {
    let l = conformal_factor_at(k, model_norm(x));
    l * l
}

fn check_model_radius(k: Curvature, s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("model radius must be finite and non-negative, got {s}")));
    }
    match k {
        Curvature::Hyperbolic if s >= 1.0 => {
            Err(Error::Domain(format!("model radius {s} is not inside the Poincaré disk")))
        }
        Curvature::Spherical if s > 1.0 => {
            Err(Error::Domain(format!("model radius {s} lies beyond the equator of the hemisphere chart")))
        }
        _ => Ok(()),
    }
}

/// Geodesic distance from the origin of the model point at Euclidean radius `s`.
pub fn geodesic_radius(k: Curvature, s: f64) -> Result<f64> {
    check_model_radius(k, s)?;
    Ok(geodesic_radius_unchecked(k, s))
}

#[inline]
pub(crate) fn geodesic_radius_unchecked(k: Curvature, s: f64) -> f64 {
    match k {
        Curvature::Flat => s,
        Curvature::Hyperbolic => 2.0 * s.atanh(),
        Curvature::Spherical => 2.0 * s.atan(),
    }
}

/// Euclidean model radius of the point at geodesic distance `r`; inverse of [`geodesic_radius`].
pub fn model_radius(k: Curvature, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be finite and non-negative, got {r}")));
    }
    if k == Curvature::Spherical && r > FRAC_PI_2 {
        return Err(Error::Domain(format!("radius {r} lies beyond the equator")));
    }
    Ok(model_radius_unchecked(k, r))
}

#[inline]
pub(crate) fn model_radius_unchecked(k: Curvature, r: f64) -> f64 {
    match k {
        Curvature::Flat => r,
        Curvature::Hyperbolic => (0.5 * r).tanh(),
        Curvature::Spherical => (0.5 * r).tan(),
    }
}
