//! Resolution of single and multiple frictionless impacts of a rigid disk
//! resting in the vertex of a two-wall corner.
//!
//! The disk is assumed to touch both walls. Given a pre-impact velocity the
//! crate applies the constitutive impact rule repeatedly until the velocity
//! leaves the corner (exit zone), becomes negligible, or a step cap is hit.
//!
//! * [`geometry`]: corner parameters, velocity representations, norms.
//! * [`zones`]: exit / single / multiple impact classification.
//! * [`rules`]: one-step impact maps (ideal and Newtonian) and the
//!   projection-based constitutive oracle.
//! * [`solvers`]: theoretical and thresholded iterative algorithms.
//! * [`analysis`]: two-step iteration matrices and spectral radii.
//! * [`harness`]: the reference experiment grid, tables and golden checks.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod rules;
pub mod solvers;
pub mod zones;

pub use analysis::{EigenBranch, IterationMatrix};
pub use error::{Error, Result};
pub use geometry::{Corner, VelocityAngular, VelocityXY, VelocityXiEta, VerticalMetric};
pub use rules::{Impulse, RestitutionMode};
pub use solvers::{RunConfig, RunResult, StopReason, TraceEntry};
pub use zones::Zone;
