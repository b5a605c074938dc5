//! One-step impact maps `v_n ↦ v_{n+1}`.
//!
//! All closed-form maps are written for a Newtonian restitution coefficient
//! `eps ∈ [0, 1]`; the ideal (elastic) rule is the `eps = 1` instance. The
//! branch functions are public so that a caller with its own zone test (the
//! thresholded solver) can fire a specific branch.
//!
//! [`oracle_step`] rebuilds the same map from metric projections onto the wall
//! normals. It shares no algebra with the closed forms and is used to
//! cross-check them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    wrap_angle, xieta_to_xy, xy_to_xieta, Corner, VelocityAngular, VelocityXY, VelocityXiEta,
    VerticalMetric,
};
use crate::zones::{classify_exact, Zone};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "eps")]
pub enum RestitutionMode {
    /// Elastic impacts; kinetic energy is conserved.
    Ideal,
    /// Newtonian restitution with `eps ∈ [0, 1)`.
    Newtonian(f64),
}

impl RestitutionMode {
    pub fn newtonian(eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::domain(
                "eps",
                format!("Newtonian restitution must lie in [0, 1), got {eps}"),
            ));
        }
        Ok(RestitutionMode::Newtonian(eps))
    }

    /// `1` maps to [`RestitutionMode::Ideal`], `[0, 1)` to Newtonian.
    pub fn from_coefficient(eps: f64) -> Result<Self> {
        if eps == 1.0 {
            Ok(RestitutionMode::Ideal)
        } else {
            Self::newtonian(eps)
        }
    }

    /// Coefficient used by the unified formulas.
    pub fn coefficient(&self) -> f64 {
        match *self {
            RestitutionMode::Ideal => 1.0,
            RestitutionMode::Newtonian(eps) => eps,
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, RestitutionMode::Ideal)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            RestitutionMode::Ideal => Ok(()),
            RestitutionMode::Newtonian(eps) => Self::newtonian(eps).map(|_| ()),
        }
    }
}

/// Reactive impulse for unit mass: `v_new = v_old + I`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Impulse {
    pub ix: f64,
    pub iy: f64,
}

impl Impulse {
    pub fn between(old: VelocityXY, new: VelocityXY) -> Self {
        Self {
            ix: new.vx - old.vx,
            iy: new.vy - old.vy,
        }
    }

    pub fn apply(&self, v: VelocityXY) -> VelocityXY {
        VelocityXY::with_spin(v.vx + self.ix, v.vy + self.iy, v.spin)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::domain(
            "eps",
            format!("restitution coefficient must lie in [0, 1], got {eps}"),
        ))
    }
}

// ---------------------------------------------------------------------------
// Cartesian branches

/// Partial reflection off wall 1.
pub fn xy_wall1(v: VelocityXY, corner: &Corner, eps: f64) -> VelocityXY {
    let k = corner.k();
    let k2 = k * k;
    let d = 1.0 + k2;
    // numerator first, then one division: this order matches the reference
    // tables step-for-step
    VelocityXY::with_spin(
        ((1.0 - eps * k2) * v.vx + (1.0 + eps) * k * v.vy) / d,
        ((1.0 + eps) * k * v.vx - (eps - k2) * v.vy) / d,
        v.spin,
    )
}

/// Partial reflection off wall 2.
pub fn xy_wall2(v: VelocityXY, corner: &Corner, eps: f64) -> VelocityXY {
    let k = corner.k();
    let k2 = k * k;
    let d = 1.0 + k2;
    VelocityXY::with_spin(
        ((1.0 - eps * k2) * v.vx - (1.0 + eps) * k * v.vy) / d,
        (-(1.0 + eps) * k * v.vx - (eps - k2) * v.vy) / d,
        v.spin,
    )
}

/// Simultaneous impact with both walls.
pub fn xy_multiple(v: VelocityXY, corner: &Corner, eps: f64) -> Result<VelocityXY> {
    let k2 = corner.k() * corner.k();
    let k4 = k2 * k2;
    let (mut x, mut y) = (v.vx, v.vy);
    let mut d = k4 * x * x + y * y;
    if !d.is_normal() {
        // the factors are homogeneous of degree 0; rescale to dodge
        // under/overflow of the squares
        let scale = x.abs().max(y.abs());
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::DegenerateMultipleImpact);
        }
        x /= scale;
        y /= scale;
        d = k4 * x * x + y * y;
    }
    let fx = (-eps * k4 * x * x + (1.0 - (1.0 + eps) * k2) * y * y) / d;
    let fy = (k2 * (k2 - (1.0 + eps)) * x * x - eps * y * y) / d;
    Ok(VelocityXY::with_spin(fx * v.vx, fy * v.vy, v.spin))
}

/// Fires the branch for `zone` regardless of where `v` actually lies.
pub fn apply_xy(v: VelocityXY, corner: &Corner, eps: f64, zone: Zone) -> Result<VelocityXY> {
    Ok(match zone {
        Zone::Z0 => v,
        Zone::Z1 => xy_wall1(v, corner, eps),
        Zone::Z2 => xy_wall2(v, corner, eps),
        Zone::Z12 => xy_multiple(v, corner, eps)?,
    })
}

pub fn step_newtonian_xy(v: VelocityXY, corner: &Corner, eps: f64) -> Result<VelocityXY> {
    check_eps(eps)?;
    let zone = classify_exact(xy_to_xieta(v, corner));
    apply_xy(v, corner, eps, zone)
}

pub fn step_ideal_xy(v: VelocityXY, corner: &Corner) -> Result<VelocityXY> {
    step_newtonian_xy(v, corner, 1.0)
}

pub fn step_xy(v: VelocityXY, corner: &Corner, mode: RestitutionMode) -> Result<VelocityXY> {
    mode.validate()?;
    step_newtonian_xy(v, corner, mode.coefficient())
}

/// Impulse delivered by one exact-dispatch step.
pub fn impulse_xy(v: VelocityXY, corner: &Corner, mode: RestitutionMode) -> Result<Impulse> {
    Ok(Impulse::between(v, step_xy(v, corner, mode)?))
}

// ---------------------------------------------------------------------------
// Wall-projected branches

pub fn xieta_wall1(v: VelocityXiEta, corner: &Corner, eps: f64) -> VelocityXiEta {
    VelocityXiEta::with_spin(
        v.xi_dot + (1.0 + eps) * corner.beta() * v.eta_dot,
        -eps * v.eta_dot,
        v.spin,
    )
}

pub fn xieta_wall2(v: VelocityXiEta, corner: &Corner, eps: f64) -> VelocityXiEta {
    VelocityXiEta::with_spin(
        -eps * v.xi_dot,
        v.eta_dot + (1.0 + eps) * corner.beta() * v.xi_dot,
        v.spin,
    )
}

pub fn xieta_multiple(v: VelocityXiEta, corner: &Corner, eps: f64) -> Result<VelocityXiEta> {
    let k2 = corner.k() * corner.k();
    let (mut xi, mut eta) = (v.xi_dot, v.eta_dot);
    let scale = xi.abs().max(eta.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateMultipleImpact);
    }
    xi /= scale;
    eta /= scale;
    let sum_sq = xi * xi + eta * eta;
    let cross = 2.0 * (1.0 - k2) * xi * eta;
    let den = (1.0 + k2) * sum_sq - cross;
    if !(den > 0.0) {
        return Err(Error::DegenerateMultipleImpact);
    }
    let diag = (eps * (1.0 + k2) * sum_sq + cross) / den;
    let off = (1.0 + eps) * (1.0 - k2) * sum_sq / den;
    Ok(VelocityXiEta::with_spin(
        -diag * v.xi_dot + off * v.eta_dot,
        off * v.xi_dot - diag * v.eta_dot,
        v.spin,
    ))
}

pub fn apply_xieta(
    v: VelocityXiEta,
    corner: &Corner,
    eps: f64,
    zone: Zone,
) -> Result<VelocityXiEta> {
    Ok(match zone {
        Zone::Z0 => v,
        Zone::Z1 => xieta_wall1(v, corner, eps),
        Zone::Z2 => xieta_wall2(v, corner, eps),
        Zone::Z12 => xieta_multiple(v, corner, eps)?,
    })
}

pub fn step_newtonian_xieta(v: VelocityXiEta, corner: &Corner, eps: f64) -> Result<VelocityXiEta> {
    check_eps(eps)?;
    apply_xieta(v, corner, eps, classify_exact(v))
}

pub fn step_ideal_xieta(v: VelocityXiEta, corner: &Corner) -> Result<VelocityXiEta> {
    step_newtonian_xieta(v, corner, 1.0)
}

// ---------------------------------------------------------------------------
// Polar form (ideal only)

/// Elastic step on the direction angle; the speed is unchanged.
///
/// The zone is decided through `(ξ̇, η̇)` of `(cos φ, sin φ)` so that the
/// boundary convention agrees with the other representations.
pub fn step_ideal_angular(v: VelocityAngular, corner: &Corner) -> VelocityAngular {
    let (sin, cos) = v.phi.sin_cos();
    let zone = classify_exact(xy_to_xieta(VelocityXY::new(cos, sin), corner));
    let two_alpha = 2.0 * corner.alpha();
    let phi = match zone {
        Zone::Z0 => return v,
        Zone::Z1 => -v.phi + two_alpha,
        Zone::Z2 => -v.phi - two_alpha,
        Zone::Z12 => {
            let t2 = corner.k() * corner.k();
            let t4 = t2 * t2;
            let (c2, s2) = (cos * cos, sin * sin);
            let den = t4 * c2 + s2;
            let common = (t4 * c2 - s2) / den;
            let new_cos = -(common + 2.0 * t2 * s2 / den) * cos;
            let new_sin = (common - 2.0 * t2 * c2 / den) * sin;
            new_sin.atan2(new_cos)
        }
    };
    VelocityAngular {
        speed: v.speed,
        phi: wrap_angle(phi),
        spin: v.spin,
    }
}

// ---------------------------------------------------------------------------
// Projection oracle

type Vertical = [f64; 3];

fn as_vertical(v: VelocityXY) -> Vertical {
    [v.vx, v.vy, v.spin]
}

fn scaled(a: Vertical, s: f64) -> Vertical {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn added(a: Vertical, b: Vertical) -> Vertical {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Metric-orthogonal projection of `v` on the line spanned by `n`.
fn project(metric: &VerticalMetric, v: Vertical, n: Vertical) -> Vertical {
    scaled(n, metric.inner(v, n) / metric.inner(n, n))
}

/// Metric normal to a wall with constraint gradient `grad` in `(x, y, θ)`:
/// the vector `G⁻¹ grad`.
fn metric_normal(metric: &VerticalMetric, grad: Vertical) -> Vertical {
    [
        grad[0] / metric.mass(),
        grad[1] / metric.mass(),
        grad[2] / metric.inertia(),
    ]
}

/// Orthogonal components of a velocity with respect to the two walls and
/// their intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalParts {
    pub wall1: [f64; 3],
    pub wall2: [f64; 3],
    pub both: [f64; 3],
}

pub fn orthogonal_parts(
    v: VelocityXY,
    corner: &Corner,
    metric: &VerticalMetric,
) -> OrthogonalParts {
    let k = corner.k();
    let p = as_vertical(v);
    let n1 = metric_normal(metric, [k, -1.0, 0.0]);
    let n2 = metric_normal(metric, [k, 1.0, 0.0]);
    // the multiple constraint fixes x and y, its tangent space is ∂θ alone
    let e_theta = [0.0, 0.0, 1.0];
    let along_theta = project(metric, p, e_theta);
    OrthogonalParts {
        wall1: project(metric, p, n1),
        wall2: project(metric, p, n2),
        both: [
            p[0] - along_theta[0],
            p[1] - along_theta[1],
            p[2] - along_theta[2],
        ],
    }
}

/// Projection-based constitutive rule for one step.
pub fn oracle_step(
    v: VelocityXY,
    corner: &Corner,
    mode: RestitutionMode,
    metric: &VerticalMetric,
) -> Result<VelocityXY> {
    mode.validate()?;
    let eps = mode.coefficient();
    let k = corner.k();
    let k2 = k * k;
    let parts = orthogonal_parts(v, corner, metric);
    let u1 = [k / (1.0 + k2), -1.0 / (1.0 + k2), 0.0];
    let u2 = [k / (1.0 + k2), 1.0 / (1.0 + k2), 0.0];
    let hits1 = metric.inner(parts.wall1, u1) > 0.0;
    let hits2 = metric.inner(parts.wall2, u2) > 0.0;
    let p = as_vertical(v);
    let out = match Zone::from_impacts(hits1, hits2) {
        Zone::Z0 => p,
        Zone::Z1 => added(p, scaled(parts.wall1, -(1.0 + eps))),
        Zone::Z2 => added(p, scaled(parts.wall2, -(1.0 + eps))),
        Zone::Z12 => {
            let w = added(parts.wall1, parts.wall2);
            let ww = metric.inner(w, w);
            if !(ww > 0.0) {
                return Err(Error::DegenerateMultipleImpact);
            }
            let lambda = -(1.0 + eps) * metric.inner(parts.both, w) / ww;
            added(p, scaled(w, lambda))
        }
    };
    Ok(VelocityXY::with_spin(out[0], out[1], out[2]))
}

/// Convenience wrapper: oracle step in `(ξ̇, η̇)` coordinates.
pub fn oracle_step_xieta(
    v: VelocityXiEta,
    corner: &Corner,
    mode: RestitutionMode,
    metric: &VerticalMetric,
) -> Result<VelocityXiEta> {
    let out = oracle_step(xieta_to_xy(v, corner), corner, mode, metric)?;
    Ok(xy_to_xieta(out, corner))
}
