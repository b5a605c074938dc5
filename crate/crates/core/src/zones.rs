//! Partition of the velocity plane by the signs of `ξ̇` and `η̇`.
//!
//! Boundaries belong to the non-impacting side: a component equal to the
//! threshold (zero in exact mode) does not trigger an impact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::VelocityXiEta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    /// Exit velocity: no impact.
    Z0,
    /// Impact with wall 1 (`kx - y = 0`) only.
    Z1,
    /// Impact with wall 2 (`kx + y = 0`) only.
    Z2,
    /// Simultaneous impact with both walls.
    Z12,
}

impl Zone {
    pub const ALL: [Zone; 4] = [Zone::Z0, Zone::Z1, Zone::Z2, Zone::Z12];

    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Z0 => "Z0",
            Zone::Z1 => "Z1",
            Zone::Z2 => "Z2",
            Zone::Z12 => "Z12",
        }
    }

    /// Zone from the two impact predicates.
    pub fn from_impacts(wall1: bool, wall2: bool) -> Self {
        match (wall1, wall2) {
            (false, false) => Zone::Z0,
            (true, false) => Zone::Z1,
            (false, true) => Zone::Z2,
            (true, true) => Zone::Z12,
        }
    }

    pub fn is_exit(&self) -> bool {
        *self == Zone::Z0
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Zone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Z0" => Ok(Zone::Z0),
            "Z1" => Ok(Zone::Z1),
            "Z2" => Ok(Zone::Z2),
            "Z12" => Ok(Zone::Z12),
            other => Err(Error::Parse(format!("unknown zone {other:?}"))),
        }
    }
}

/// Exact classification: `η̇ > 0` means approach to wall 1, `ξ̇ > 0` to wall 2.
pub fn classify_exact(v: VelocityXiEta) -> Zone {
    Zone::from_impacts(v.eta_dot > 0.0, v.xi_dot > 0.0)
}

/// Classification with zero replaced by the threshold `s ≥ 0`.
pub fn classify_thresholded(v: VelocityXiEta, s: f64) -> Result<Zone> {
    if !(s >= 0.0) {
        return Err(Error::domain(
            "S",
            format!("zone threshold must be non-negative, got {s}"),
        ));
    }
    Ok(classify_with(v, s))
}

/// Unchecked variant used inside solver loops once the threshold is known
/// to be valid.
pub(crate) fn classify_with(v: VelocityXiEta, s: f64) -> Zone {
    Zone::from_impacts(v.eta_dot > s, v.xi_dot > s)
}

/// Zone of `(ẋ, -ẏ)` given the zone of `(ẋ, ẏ)`.
pub fn reflect_symmetry(z: Zone) -> Zone {
    match z {
        Zone::Z1 => Zone::Z2,
        Zone::Z2 => Zone::Z1,
        other => other,
    }
}
