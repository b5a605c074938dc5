//! Two-step iteration matrices of the Newtonian rule and their spectra.
//!
//! After the (at most one) multiple impact, a non-exiting trajectory
//! alternates wall 1 / wall 2. Two consecutive steps act linearly on
//! `(ξ̇, η̇)` through `H₁` (wall 1 then wall 2) or `H₂` (wall 2 then wall 1);
//! in Cartesian components the same maps are `K_i = B⁻¹ H_i B`. Their common
//! spectral radius bounds the per-two-step decay of the velocity.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Corner, VelocityXY};

/// Relative size of `|disc|` (against `tr² + 4|det|`) below which the two
/// eigenvalues are treated as one repeated root.
pub const REPEATED_ROOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationMatrix(pub [[f64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenBranch {
    Complex,
    Repeated,
    Real,
}

impl fmt::Display for EigenBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EigenBranch::Complex => "complex",
            EigenBranch::Repeated => "repeated",
            EigenBranch::Real => "real",
        })
    }
}

impl IterationMatrix {
    pub const IDENTITY: Self = Self([[1.0, 0.0], [0.0, 1.0]]);

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn determinant(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Discriminant `tr² - 4 det` of the characteristic polynomial.
    pub fn discriminant(&self) -> f64 {
        let t = self.trace();
        t * t - 4.0 * self.determinant()
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let [[a, b], [c, d]] = self.0;
        Some(Self([[d / det, -b / det], [-c / det, a / det]]))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Spectral (operator 2-) norm, from the largest eigenvalue of `MᵀM`.
    pub fn operator_norm(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let p = a * a + c * c;
        let q = a * b + c * d;
        let r = b * b + d * d;
        let half_tr = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        (half_tr + rad).sqrt()
    }

    pub fn branch(&self) -> EigenBranch {
        let t = self.trace();
        let disc = self.discriminant();
        let scale = t * t + 4.0 * self.determinant().abs();
        if disc.abs() <= REPEATED_ROOT_TOL * scale {
            EigenBranch::Repeated
        } else if disc < 0.0 {
            EigenBranch::Complex
        } else {
            EigenBranch::Real
        }
    }

    /// Both eigenvalues from the closed-form quadratic solution.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_t = 0.5 * self.trace();
        let disc = self.discriminant();
        match self.branch() {
            EigenBranch::Repeated => [Complex64::new(half_t, 0.0); 2],
            EigenBranch::Complex => {
                let im = 0.5 * (-disc).sqrt();
                [Complex64::new(half_t, im), Complex64::new(half_t, -im)]
            }
            EigenBranch::Real => {
                // larger root first, the smaller one via the product to avoid
                // cancellation
                let root = 0.5 * disc.sqrt();
                let big = if half_t >= 0.0 {
                    half_t + root
                } else {
                    half_t - root
                };
                let small = if big != 0.0 {
                    self.determinant() / big
                } else {
                    0.0
                };
                [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
            }
        }
    }
}

impl Mul for IterationMatrix {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }
}

fn check_ranges(eps: f64, beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::domain(
            "eps",
            format!("must lie in [0, 1), got {eps}"),
        ));
    }
    if !(beta > -1.0 && beta < 1.0) {
        return Err(Error::domain(
            "beta",
            format!("must lie in (-1, 1), got {beta}"),
        ));
    }
    Ok(())
}

/// Wall 1 then wall 2 in `(ξ̇, η̇)`.
pub fn build_h1(eps: f64, beta: f64) -> Result<IterationMatrix> {
    check_ranges(eps, beta)?;
    let g = beta * (1.0 + eps);
    Ok(IterationMatrix([[-eps, -eps * g], [g, g * g - eps]]))
}

/// Wall 2 then wall 1 in `(ξ̇, η̇)`.
pub fn build_h2(eps: f64, beta: f64) -> Result<IterationMatrix> {
    check_ranges(eps, beta)?;
    let g = beta * (1.0 + eps);
    Ok(IterationMatrix([[g * g - eps, g], [-eps * g, -eps]]))
}

/// Change of coordinates `(ẋ, ẏ) ↦ (ξ̇, η̇)`.
pub fn basis_b(k: f64) -> IterationMatrix {
    IterationMatrix([[k, 1.0], [k, -1.0]])
}

fn check_slope(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("k", format!("must be positive, got {k}")))
    }
}

/// `H₁` expressed in Cartesian components, written out entrywise.
pub fn build_k1(eps: f64, k: f64) -> Result<IterationMatrix> {
    check_slope(k)?;
    let k2 = k * k;
    check_ranges(eps, (1.0 - k2) / (1.0 + k2))?;
    let q = (1.0 + k2) * (1.0 + k2);
    let e1 = (1.0 + eps) * (1.0 + eps);
    let a = ((1.0 - eps * k2).powi(2) - k2 * e1) / q;
    let b = k * (1.0 - k2) * e1 / q;
    let d = ((eps - k2).powi(2) - k2 * e1) / q;
    Ok(IterationMatrix([[a, b], [-b, d]]))
}

/// `H₂` expressed in Cartesian components.
pub fn build_k2(eps: f64, k: f64) -> Result<IterationMatrix> {
    let IterationMatrix([[a, b], [c, d]]) = build_k1(eps, k)?;
    Ok(IterationMatrix([[a, -b], [-c, d]]))
}

/// `B⁻¹ M B`.
pub fn similarity(m: &IterationMatrix, b: &IterationMatrix) -> Option<IterationMatrix> {
    Some(b.inverse()? * *m * *b)
}

pub fn spectral_radius(m: &IterationMatrix) -> f64 {
    let [l1, l2] = m.eigenvalues();
    l1.norm().max(l2.norm())
}

/// Spectral summary of the two-step map for one corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eps: f64,
    pub alpha: f64,
    pub k: f64,
    pub beta: f64,
    pub branch: EigenBranch,
    pub rho: f64,
}

/// `ρ(H₁)` and its eigenvalue branch. Requires `eps ∈ (0, 1)`.
///
/// The branch compares `b = β²(1+ε)²` with `4ε`. The discriminant of `H₁`
/// is `b(b - 4ε)`, so at `β = 0` the pair `-ε, -ε` counts as complex here
/// although [`IterationMatrix::branch`] sees a repeated root.
pub fn two_step_spectrum(eps: f64, corner: &Corner) -> Result<Spectrum> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(
            "eps",
            format!("must lie in (0, 1), got {eps}"),
        ));
    }
    let beta = corner.beta();
    let h = build_h1(eps, beta)?;
    let b = beta * beta * (1.0 + eps) * (1.0 + eps);
    let gap = b - 4.0 * eps;
    let branch = if gap.abs() <= REPEATED_ROOT_TOL * 4.0 * eps {
        EigenBranch::Repeated
    } else if gap < 0.0 {
        EigenBranch::Complex
    } else {
        EigenBranch::Real
    };
    Ok(Spectrum {
        eps,
        alpha: corner.alpha(),
        k: corner.k(),
        beta,
        branch,
        rho: spectral_radius(&h),
    })
}

/// `ρ(H₁)` for `eps ∈ (0, 1)`, `k ∈ (0, 1)`, checked against the proven
/// enclosure `ε ≤ ρ < 1`.
pub fn rho_bound_check(eps: f64, k: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(
            "eps",
            format!("must lie in (0, 1), got {eps}"),
        ));
    }
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::domain("k", format!("must lie in (0, 1), got {k}")));
    }
    let k2 = k * k;
    let rho = spectral_radius(&build_h1(eps, (1.0 - k2) / (1.0 + k2))?);
    // relative slack of a few ulps at the complex/real switch, where ρ = ε
    let lower = eps * (1.0 - 1e-12);
    if !(rho >= lower && rho < 1.0) {
        return Err(Error::BoundViolation(format!(
            "rho(H1) = {rho} outside [{eps}, 1) for eps = {eps}, k = {k}"
        )));
    }
    Ok(rho)
}

/// Empirical per-two-step contraction factor of a trace.
///
/// Drops `v₀` (possibly a multiple impact), then fits
/// `ln ‖v_{2h}‖ ≈ a + h ln r` by least squares over `h ≥ 1` and returns `r`.
/// The result is comparable to `ρ(H₁)`.
pub fn estimate_rate(trace: &[VelocityXY]) -> Result<f64> {
    if trace.len() < 8 {
        return Err(Error::InvalidTrace(format!(
            "need at least 8 entries, got {}",
            trace.len()
        )));
    }
    let norms: Vec<f64> = trace.iter().map(VelocityXY::norm2).collect();
    if let Some(i) = norms.windows(2).position(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidTrace(format!(
            "norms must strictly decrease (entry {} -> {})",
            i,
            i + 1
        )));
    }
    if norms.last().is_some_and(|n| *n <= 0.0) {
        return Err(Error::InvalidTrace(
            "trace reaches the zero velocity".into(),
        ));
    }
    let points: Vec<(f64, f64)> = norms
        .iter()
        .enumerate()
        .skip(2)
        .step_by(2)
        .map(|(n, norm)| ((n / 2) as f64, norm.ln()))
        .collect();
    let count = points.len() as f64;
    let mean_h = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_l = points.iter().map(|p| p.1).sum::<f64>() / count;
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), (h, l)| {
        (
            num + (h - mean_h) * (l - mean_l),
            den + (h - mean_h) * (h - mean_h),
        )
    });
    Ok((num / den).exp())
}
