//! Corner geometry and the three coordinate representations of the disk
//! velocity: Cartesian `(ẋ, ẏ)`, wall-projected `(ξ̇, η̇)` and polar
//! `(v, φ)`.
//!
//! The walls are `k x - y = 0` (wall 1) and `k x + y = 0` (wall 2) with
//! `k = tan α`, so `ξ̇ = k ẋ + ẏ` and `η̇ = k ẋ - ẏ` measure the approach
//! speed towards wall 2 and wall 1 respectively (up to a positive factor).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wedge with half-angle `alpha`; the walls meet at `2 alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    alpha: f64,
    k: f64,
    beta: f64,
}

impl Corner {
    /// Builds the corner of half-angle `alpha` (radians), `alpha ∈ (0, π/2)`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < PI / 2.0) {
            return Err(Error::domain(
                "alpha",
                format!("half-angle must lie in (0, pi/2), got {alpha}"),
            ));
        }
        let k = alpha.tan();
        Ok(Self::from_parts(alpha, k))
    }

    /// Builds the corner from the wall slope `k = tan alpha > 0`.
    pub fn from_slope(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::domain(
                "k",
                format!("wall slope must be positive and finite, got {k}"),
            ));
        }
        Ok(Self::from_parts(k.atan(), k))
    }

    fn from_parts(alpha: f64, k: f64) -> Self {
        let k2 = k * k;
        Self {
            alpha,
            k,
            beta: (1.0 - k2) / (1.0 + k2),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `(1 - k²) / (1 + k²) = cos 2α`.
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Linear velocity of the disk centre plus the (never modified) spin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityXY {
    pub vx: f64,
    pub vy: f64,
    #[serde(default)]
    pub spin: f64,
}

impl VelocityXY {
    pub const fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy, spin: 0.0 }
    }

    pub const fn with_spin(vx: f64, vy: f64, spin: f64) -> Self {
        Self { vx, vy, spin }
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.spin.is_finite()
    }

    /// Euclidean norm of `(ẋ, ẏ)`; the spin is not included.
    pub fn norm2(&self) -> f64 {
        norm2_xy(*self)
    }

    /// Same direction, unit Euclidean norm. `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm2();
        if n > 0.0 && n.is_finite() {
            Some(Self::with_spin(self.vx / n, self.vy / n, self.spin))
        } else {
            None
        }
    }

    /// Mirror image across the bisector, `(ẋ, ẏ) ↦ (ẋ, -ẏ)`.
    pub fn mirrored(&self) -> Self {
        Self::with_spin(self.vx, -self.vy, self.spin)
    }

    pub fn to_xieta(&self, corner: &Corner) -> VelocityXiEta {
        xy_to_xieta(*self, corner)
    }

    pub fn to_angular(&self) -> Option<VelocityAngular> {
        VelocityAngular::from_xy(*self)
    }
}

impl fmt::Display for VelocityXY {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.vx, self.vy)
    }
}

/// Velocity in the wall-projected coordinates `ξ̇ = kẋ + ẏ`, `η̇ = kẋ - ẏ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityXiEta {
    pub xi_dot: f64,
    pub eta_dot: f64,
    #[serde(default)]
    pub spin: f64,
}

impl VelocityXiEta {
    pub const fn new(xi_dot: f64, eta_dot: f64) -> Self {
        Self {
            xi_dot,
            eta_dot,
            spin: 0.0,
        }
    }

    pub const fn with_spin(xi_dot: f64, eta_dot: f64, spin: f64) -> Self {
        Self {
            xi_dot,
            eta_dot,
            spin,
        }
    }

    pub fn to_xy(&self, corner: &Corner) -> VelocityXY {
        xieta_to_xy(*self, corner)
    }

    /// Swapping the two coordinates is the mirror `ẏ ↦ -ẏ`.
    pub fn mirrored(&self) -> Self {
        Self::with_spin(self.eta_dot, self.xi_dot, self.spin)
    }
}

/// Polar form `(v cos φ, v sin φ)` with `v > 0`, `φ ∈ (-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityAngular {
    pub speed: f64,
    pub phi: f64,
    #[serde(default)]
    pub spin: f64,
}

impl VelocityAngular {
    pub fn new(speed: f64, phi: f64) -> Result<Self> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::domain(
                "speed",
                format!("speed must be positive, got {speed}"),
            ));
        }
        if !phi.is_finite() {
            return Err(Error::domain("phi", "direction angle must be finite"));
        }
        Ok(Self {
            speed,
            phi: wrap_angle(phi),
            spin: 0.0,
        })
    }

    /// `None` when the velocity is zero (no direction).
    pub fn from_xy(v: VelocityXY) -> Option<Self> {
        let speed = v.norm2();
        if !(speed > 0.0 && speed.is_finite()) {
            return None;
        }
        Some(Self {
            speed,
            phi: wrap_angle(v.vy.atan2(v.vx)),
            spin: v.spin,
        })
    }

    pub fn to_xy(&self) -> VelocityXY {
        VelocityXY::with_spin(
            self.speed * self.phi.cos(),
            self.speed * self.phi.sin(),
            self.spin,
        )
    }
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(phi: f64) -> f64 {
    let mut a = phi % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Mass data of the disk entering the kinetic-energy metric `diag(m, m, A)`
/// on `(ẋ, ẏ, θ̇)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalMetric {
    mass: f64,
    inertia: f64,
}

impl Default for VerticalMetric {
    fn default() -> Self {
        Self::unit()
    }
}

impl VerticalMetric {
    pub fn new(mass: f64, inertia: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain(
                "mass",
                format!("must be positive, got {mass}"),
            ));
        }
        if !(inertia.is_finite() && inertia > 0.0) {
            return Err(Error::domain(
                "inertia",
                format!("must be positive, got {inertia}"),
            ));
        }
        Ok(Self { mass, inertia })
    }

    /// Unit mass and unit moment of inertia.
    pub const fn unit() -> Self {
        Self {
            mass: 1.0,
            inertia: 1.0,
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// `diag(m, m, A)` in `(x, y, θ)` coordinates.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.mass, 0.0, 0.0],
            [0.0, self.mass, 0.0],
            [0.0, 0.0, self.inertia],
        ]
    }

    /// Scalar product of two vertical vectors given in `(x, y, θ)`
    /// components.
    pub fn inner(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        self.mass * (a[0] * b[0] + a[1] * b[1]) + self.inertia * a[2] * b[2]
    }

    /// The metric expressed in `(ξ, η, θ)` coordinates.
    pub fn gamma(&self, corner: &Corner) -> [[f64; 3]; 3] {
        let k2 = corner.k() * corner.k();
        let diag = self.mass * (1.0 + k2) / (4.0 * k2);
        let off = self.mass * (1.0 - k2) / (4.0 * k2);
        [[diag, off, 0.0], [off, diag, 0.0], [0.0, 0.0, self.inertia]]
    }
}

pub fn xy_to_xieta(v: VelocityXY, corner: &Corner) -> VelocityXiEta {
    let k = corner.k();
    VelocityXiEta::with_spin(k * v.vx + v.vy, k * v.vx - v.vy, v.spin)
}

pub fn xieta_to_xy(v: VelocityXiEta, corner: &Corner) -> VelocityXY {
    let k = corner.k();
    VelocityXY::with_spin(
        (v.xi_dot + v.eta_dot) / (2.0 * k),
        (v.xi_dot - v.eta_dot) / 2.0,
        v.spin,
    )
}

pub fn norm2_xy(v: VelocityXY) -> f64 {
    v.vx.hypot(v.vy)
}

/// Euclidean norm of `(ẋ, ẏ)` computed directly from `(ξ̇, η̇)`.
pub fn norm2_xieta(v: VelocityXiEta, corner: &Corner) -> f64 {
    let k2 = corner.k() * corner.k();
    let (xi, eta) = (v.xi_dot, v.eta_dot);
    let sq = (1.0 + k2) / (4.0 * k2) * (xi * xi + eta * eta) + (1.0 - k2) / (2.0 * k2) * xi * eta;
    sq.max(0.0).sqrt()
}

/// An angle parsed from text. `pi/N`-style inputs are kept symbolic so that
/// they can be echoed back exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Angle {
    radians: f64,
    label: String,
}

impl Angle {
    pub fn radians(&self) -> f64 {
        self.radians
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `π / n`.
    pub fn pi_over(n: u32) -> Self {
        Self {
            radians: PI / f64::from(n),
            label: format!("pi/{n}"),
        }
    }

    pub fn from_radians(radians: f64) -> Self {
        Self {
            radians,
            label: radians.to_string(),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// Accepts decimal radians (`0.5236`), `pi`, `pi/N`, `M*pi/N` and `Mpi/N`.
    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        let lower = text.to_ascii_lowercase();
        let bad = || Error::Parse(format!("cannot parse angle {text:?}"));
        let Some(pos) = lower.find("pi") else {
            let radians: f64 = lower.parse().map_err(|_| bad())?;
            return Ok(Self {
                radians,
                label: text.to_string(),
            });
        };
        let head = lower[..pos].trim().trim_end_matches('*').trim();
        let tail = lower[pos + 2..].trim();
        let numer: f64 = match head {
            "" => 1.0,
            "-" => -1.0,
            h => h.parse().map_err(|_| bad())?,
        };
        let denom: f64 = if tail.is_empty() {
            1.0
        } else {
            let d = tail.strip_prefix('/').ok_or_else(bad)?.trim();
            d.parse().map_err(|_| bad())?
        };
        if denom == 0.0 {
            return Err(bad());
        }
        // `PI / N` rather than `PI * (1/N)` so that "pi/6" is exactly PI / 6.0.
        let radians = if numer == 1.0 {
            PI / denom
        } else {
            numer * PI / denom
        };
        Ok(Self {
            radians,
            label: text.to_string(),
        })
    }
}

impl TryFrom<String> for Angle {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<Angle> for String {
    fn from(value: Angle) -> Self {
        value.label
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn corner_examples() {
        let c = Corner::new(PI / 4.0).unwrap();
        assert_close(c.k(), 1.0, 1e-15);
        assert_close(c.beta(), 0.0, 1e-15);

        let c = Corner::new(PI / 6.0).unwrap();
        assert_close(c.k(), 0.57735, 5e-6);
        assert_close(c.beta(), 0.5, 1e-15);

        let c = Corner::new(PI / 64.0).unwrap();
        assert_close(c.k(), 0.04913, 5e-6);
    }

    #[test]
    fn corner_rejects_out_of_range() {
        for alpha in [0.0, -0.1, PI / 2.0, 2.0, f64::NAN, f64::INFINITY] {
            assert!(Corner::new(alpha).is_err(), "alpha = {alpha}");
        }
        assert!(Corner::from_slope(0.0).is_err());
        assert!(Corner::from_slope(-1.0).is_err());
    }

    #[test]
    fn coordinate_change_examples() {
        let k1 = Corner::from_slope(1.0).unwrap();
        let half = Corner::from_slope(0.5).unwrap();

        assert_eq!(
            xy_to_xieta(VelocityXY::new(1.0, 0.0), &k1),
            VelocityXiEta::new(1.0, 1.0)
        );
        assert_eq!(
            xy_to_xieta(VelocityXY::new(0.0, 1.0), &k1),
            VelocityXiEta::new(1.0, -1.0)
        );
        assert_eq!(
            xy_to_xieta(VelocityXY::new(-1.0, 0.0), &half),
            VelocityXiEta::new(-0.5, -0.5)
        );

        assert_eq!(
            xieta_to_xy(VelocityXiEta::new(1.0, 1.0), &k1),
            VelocityXY::new(1.0, 0.0)
        );
        assert_eq!(
            xieta_to_xy(VelocityXiEta::new(0.0, 0.0), &half),
            VelocityXY::new(0.0, 0.0)
        );
        assert_eq!(
            xieta_to_xy(VelocityXiEta::new(1.0, -1.0), &half),
            VelocityXY::new(0.0, 1.0)
        );
    }

    #[test]
    fn norms() {
        assert_eq!(norm2_xy(VelocityXY::new(3.0, 4.0)), 5.0);
        assert_eq!(norm2_xy(VelocityXY::new(0.0, 0.0)), 0.0);
        assert_close(norm2_xy(VelocityXY::new(0.5, 0.866)), 1.0, 1e-3);
        assert_eq!(norm2_xy(VelocityXY::with_spin(3.0, 4.0, 100.0)), 5.0);

        let k1 = Corner::from_slope(1.0).unwrap();
        assert_close(norm2_xieta(VelocityXiEta::new(1.0, 1.0), &k1), 1.0, 1e-15);
        assert_close(norm2_xieta(VelocityXiEta::new(1.0, -1.0), &k1), 1.0, 1e-15);
        let c = Corner::new(0.3).unwrap();
        assert_eq!(norm2_xieta(VelocityXiEta::new(0.0, 0.0), &c), 0.0);
    }

    #[test]
    fn angular_round_trip_and_wrap() {
        let v = VelocityAngular::new(2.0, PI).unwrap();
        assert_eq!(v.phi, PI);
        let v = VelocityAngular::new(2.0, -PI).unwrap();
        assert_eq!(v.phi, PI);
        let xy = VelocityAngular::new(1.0, PI / 3.0).unwrap().to_xy();
        assert_close(xy.vx, 0.5, 1e-15);
        let back = VelocityAngular::from_xy(xy).unwrap();
        assert_close(back.phi, PI / 3.0, 1e-15);
        assert!(VelocityAngular::from_xy(VelocityXY::new(0.0, 0.0)).is_none());
        assert!(VelocityAngular::new(0.0, 1.0).is_err());
        assert_close(wrap_angle(3.0 * PI), PI, 1e-15);
        assert_close(wrap_angle(-3.5 * PI), 0.5 * PI, 1e-15);
    }

    #[test]
    fn metric_validation_and_gamma() {
        assert!(VerticalMetric::new(0.0, 1.0).is_err());
        assert!(VerticalMetric::new(1.0, -1.0).is_err());
        let g = VerticalMetric::new(2.0, 3.0).unwrap();
        let c = Corner::from_slope(1.0).unwrap();
        let gamma = g.gamma(&c);
        assert_close(gamma[0][0], 1.0, 1e-15);
        assert_close(gamma[0][1], 0.0, 1e-15);
        assert_eq!(gamma[2][2], 3.0);
        assert_eq!(g.matrix()[1][1], 2.0);
    }

    #[test]
    fn angle_parsing() {
        let a: Angle = "pi/6".parse().unwrap();
        assert_eq!(a.radians(), PI / 6.0);
        assert_eq!(a.label(), "pi/6");
        assert_eq!("PI/64".parse::<Angle>().unwrap().radians(), PI / 64.0);
        assert_eq!("pi".parse::<Angle>().unwrap().radians(), PI);
        assert_eq!("2pi/7".parse::<Angle>().unwrap().radians(), 2.0 * PI / 7.0);
        assert_eq!("3*pi/8".parse::<Angle>().unwrap().radians(), 3.0 * PI / 8.0);
        assert_eq!("0.25".parse::<Angle>().unwrap().radians(), 0.25);
        assert!("pi/0".parse::<Angle>().is_err());
        assert!("pie".parse::<Angle>().is_err());
        assert!("abc".parse::<Angle>().is_err());
        assert_eq!(Angle::pi_over(12).radians(), PI / 12.0);
    }
}
