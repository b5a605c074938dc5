//! Iterated impact resolution.
//!
//! Both the theoretical algorithm and the thresholded numerical algorithm run
//! through one loop. The loop continues while
//!
//! ```text
//! (ξ̇ > S or η̇ > S)  and  n < N_max  and  ‖v‖₂ > S_v
//! ```
//!
//! and each pass fires the branch selected by the thresholded zone test. With
//! `S = S_v = 0` this is the theoretical algorithm.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{xy_to_xieta, Corner, VelocityXY, VelocityXiEta};
use crate::rules::{apply_xy, RestitutionMode};
use crate::zones::{classify_with, Zone};

/// Twice the binary64 machine epsilon.
pub const DEFAULT_ZONE_THRESHOLD: f64 = 2.0 * f64::EPSILON;
pub const DEFAULT_REST_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Allowed deviation of `‖v0‖₂` from one before the thresholded solver
/// rescales its input.
pub const UNIT_NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: RestitutionMode,
    pub corner: Corner,
    zone_threshold: f64,
    rest_threshold: f64,
    max_steps: usize,
    pub trace: bool,
}

impl RunConfig {
    /// Thresholded configuration with the reference settings
    /// `S = 2·2⁻⁵²`, `S_v = 1e-12`, `N_max = 10⁴`.
    pub fn new(mode: RestitutionMode, corner: Corner) -> Result<Self> {
        mode.validate()?;
        Ok(Self {
            mode,
            corner,
            zone_threshold: DEFAULT_ZONE_THRESHOLD,
            rest_threshold: DEFAULT_REST_THRESHOLD,
            max_steps: DEFAULT_MAX_STEPS,
            trace: false,
        })
    }

    /// Zero thresholds: exact sign tests and no rest criterion.
    pub fn theoretical(mode: RestitutionMode, corner: Corner, max_steps: usize) -> Result<Self> {
        Self::new(mode, corner)?
            .with_thresholds(0.0, 0.0)?
            .with_max_steps(max_steps)
    }

    pub fn with_thresholds(mut self, zone: f64, rest: f64) -> Result<Self> {
        if !(zone >= 0.0 && zone.is_finite()) {
            return Err(Error::domain(
                "S",
                format!("must be a non-negative number, got {zone}"),
            ));
        }
        if !(rest >= 0.0 && rest.is_finite()) {
            return Err(Error::domain(
                "Sv",
                format!("must be a non-negative number, got {rest}"),
            ));
        }
        self.zone_threshold = zone;
        self.rest_threshold = rest;
        Ok(self)
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::domain("nmax", "step cap must be at least 1"));
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn zone_threshold(&self) -> f64 {
        self.zone_threshold
    }

    pub fn rest_threshold(&self) -> f64 {
        self.rest_threshold
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    /// Both `ξ̇` and `η̇` are at most `S`.
    ExitZone,
    /// `‖v‖₂ ≤ S_v`.
    AlmostAtRest,
    /// `N_max` steps were applied.
    StepCap,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ExitZone => "ExitZone",
            StopReason::AlmostAtRest => "AlmostAtRest",
            StopReason::StepCap => "StepCap",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ExitZone" => Ok(StopReason::ExitZone),
            "AlmostAtRest" => Ok(StopReason::AlmostAtRest),
            "StepCap" => Ok(StopReason::StepCap),
            other => Err(Error::Parse(format!("unknown stop reason {other:?}"))),
        }
    }
}

/// State before step `step + 1`. `zone` is the branch the loop fires next,
/// or the exit classification on the last entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub xy: VelocityXY,
    pub xieta: VelocityXiEta,
    pub zone: Zone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Initial velocity actually iterated (after any normalisation).
    pub v0: VelocityXY,
    pub v_final: VelocityXY,
    pub steps: usize,
    pub stop: StopReason,
    /// Classification of `v0` under the run's zone threshold.
    pub zone0: Zone,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

impl RunResult {
    pub fn norm_final(&self) -> f64 {
        self.v_final.norm2()
    }
}

fn check_input(v0: VelocityXY) -> Result<()> {
    if v0.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "v0",
            format!("initial velocity must be finite, got {v0:?}"),
        ))
    }
}

/// Brent cycle detection on the exact bit pattern of the state.
///
/// Non-ideal runs without a rest threshold decay into subnormals and then
/// cycle until the step cap. Every state on a detected cycle has already
/// passed the stop checks, so whole periods can be skipped without changing
/// the result.
struct CycleSkip {
    saved: [u64; 3],
    power: usize,
    lam: usize,
    done: bool,
}

impl CycleSkip {
    fn new(v: VelocityXY) -> Self {
        Self {
            saved: bits(v),
            power: 1,
            lam: 0,
            done: false,
        }
    }

    /// Called once per step before the map is applied. Returns how many
    /// steps can be skipped (a multiple of the period, at most `remaining`).
    fn skippable(&mut self, v: VelocityXY, remaining: usize) -> usize {
        if self.done {
            return 0;
        }
        let current = bits(v);
        let mut skip = 0;
        if self.lam > 0 && current == self.saved {
            self.done = true;
            // leave room for the step about to be applied
            skip = (remaining - 1) / self.lam * self.lam;
        } else if self.lam == self.power {
            self.saved = current;
            self.power *= 2;
            self.lam = 0;
        }
        self.lam += 1;
        skip
    }
}

fn bits(v: VelocityXY) -> [u64; 3] {
    [v.vx.to_bits(), v.vy.to_bits(), v.spin.to_bits()]
}

fn iterate(v0: VelocityXY, cfg: &RunConfig) -> Result<RunResult> {
    let corner = &cfg.corner;
    let eps = cfg.mode.coefficient();
    let s = cfg.zone_threshold;

    let mut v = v0;
    let mut q = xy_to_xieta(v, corner);
    let zone0 = classify_with(q, s);
    let mut trace = cfg.trace.then(Vec::new);
    let mut steps = 0;
    let mut cycle = CycleSkip::new(v);

    let stop = loop {
        let zone = classify_with(q, s);
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                step: steps,
                xy: v,
                xieta: q,
                zone,
            });
        }
        if zone == Zone::Z0 {
            break StopReason::ExitZone;
        }
        if v.norm2() <= cfg.rest_threshold {
            break StopReason::AlmostAtRest;
        }
        if steps >= cfg.max_steps {
            break StopReason::StepCap;
        }
        if trace.is_none() {
            steps += cycle.skippable(v, cfg.max_steps - steps);
        }
        v = apply_xy(v, corner, eps, zone)?;
        q = xy_to_xieta(v, corner);
        steps += 1;
    };

    Ok(RunResult {
        v0,
        v_final: v,
        steps,
        stop,
        zone0,
        trace,
    })
}

/// Theoretical algorithm: exact sign tests, any input magnitude, `n_cap`
/// as a safety cap.
pub fn run_ta(
    v0: VelocityXY,
    mode: RestitutionMode,
    corner: Corner,
    n_cap: usize,
    trace: bool,
) -> Result<RunResult> {
    check_input(v0)?;
    let cfg = RunConfig::theoretical(mode, corner, n_cap)?.with_trace(trace);
    iterate(v0, &cfg)
}

/// Thresholded numerical algorithm. Inputs whose norm is not within
/// [`UNIT_NORM_SLACK`] of one are rescaled to unit norm first.
pub fn run_na(v0: VelocityXY, cfg: &RunConfig) -> Result<RunResult> {
    check_input(v0)?;
    cfg.mode.validate()?;
    let n = v0.norm2();
    let v0 = if (n - 1.0).abs() > UNIT_NORM_SLACK {
        match v0.normalized() {
            Some(unit) => {
                log::warn!("initial velocity has norm {n}; normalised to unit norm");
                unit
            }
            None => v0,
        }
    } else {
        v0
    };
    iterate(v0, cfg)
}

/// One entry of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub eps: f64,
    pub alpha: f64,
    pub v0: VelocityXY,
}

/// Runs every case with the thresholds, cap and trace flag of `defaults`;
/// mode and corner come from the case. Results keep the input order.
pub fn run_grid(cases: &[GridCase], defaults: &RunConfig) -> Result<Vec<RunResult>> {
    cases
        .par_iter()
        .enumerate()
        .map(|(index, case)| {
            run_case(case, defaults).map_err(|e| Error::Grid {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

fn run_case(case: &GridCase, defaults: &RunConfig) -> Result<RunResult> {
    let cfg = RunConfig {
        mode: RestitutionMode::from_coefficient(case.eps)?,
        corner: Corner::new(case.alpha)?,
        ..*defaults
    };
    run_na(case.v0, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(x: f64, y: f64) -> VelocityXY {
        VelocityXY::new(x, y).normalized().unwrap()
    }

    #[test]
    fn ta_examples() {
        let c = Corner::new(PI / 6.0).unwrap();
        let r = run_ta(
            VelocityXY::new(0.5, 0.866),
            RestitutionMode::Ideal,
            c,
            100,
            false,
        )
        .unwrap();
        assert_eq!((r.steps, r.stop), (2, StopReason::ExitZone));
        assert!(
            (r.v_final.vx + 1.0).abs() < 1e-3 && r.v_final.vy.abs() < 1e-3,
            "{r:?}"
        );

        let c = Corner::from_slope(1.0).unwrap();
        let v0 = VelocityXY::new(-0.707, 0.707);
        let r = run_ta(v0, RestitutionMode::Ideal, c, 100, false).unwrap();
        assert_eq!((r.steps, r.v_final, r.zone0), (0, v0, Zone::Z0));

        let c = Corner::new(PI / 64.0).unwrap();
        let r = run_ta(
            unit(1.0, 1.0 / c.k()),
            RestitutionMode::Ideal,
            c,
            1000,
            false,
        )
        .unwrap();
        assert_eq!(
            (r.steps, r.stop, r.zone0),
            (16, StopReason::ExitZone, Zone::Z2)
        );
    }

    #[test]
    fn na_examples() {
        let c = Corner::new(PI / 4.0).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Newtonian(0.95), c).unwrap();
        let r = run_na(VelocityXY::new(1.0, 0.0), &cfg).unwrap();
        assert_eq!((r.steps, r.stop), (1, StopReason::ExitZone));
        assert!((r.v_final.vx + 0.95).abs() < 1e-15 && r.v_final.vy.abs() < 1e-15);

        let c = Corner::new(PI / 64.0).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Newtonian(0.75), c).unwrap();
        let r = run_na(unit(1.0, c.k() / 3.0), &cfg).unwrap();
        assert_eq!((r.steps, r.stop), (712, StopReason::AlmostAtRest));
        assert!(
            (r.norm_final() - 9.68e-13).abs() < 5e-15,
            "{}",
            r.norm_final()
        );

        let c = Corner::new(PI / 12.0).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Newtonian(0.25), c).unwrap();
        let r = run_na(unit(1.0, c.k() / 3.0), &cfg).unwrap();
        assert_eq!((r.steps, r.stop), (92, StopReason::AlmostAtRest));
    }

    #[test]
    fn thresholds_absorb_rounding_noise() {
        // (1/√2, 1/√2) at k = 1 bounces once; the computed result carries a
        // 4.4e-16 residue in η̇ that only the threshold treats as zero
        let c = Corner::new(PI / 4.0).unwrap();
        let v0 = VelocityXY::new(1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt());
        let cfg = RunConfig::new(RestitutionMode::Ideal, c).unwrap();
        let na = run_na(v0, &cfg).unwrap();
        assert_eq!(na.steps, 1);
        assert_eq!(na.stop, StopReason::ExitZone);
    }

    #[test]
    fn cycle_skip_matches_plain_iteration() {
        let c = Corner::new(PI / 64.0).unwrap();
        let mode = RestitutionMode::newtonian(0.05).unwrap();
        let v0 = unit(1.0, 0.3);
        for cap in [1, 2, 3, 50_000, 200_001] {
            let fast = run_ta(v0, mode, c, cap, false).unwrap();
            let (mut v, mut n) = (v0, 0);
            while n < cap && classify_with(xy_to_xieta(v, &c), 0.0) != Zone::Z0 {
                v = crate::rules::step_newtonian_xy(v, &c, 0.05).unwrap();
                n += 1;
            }
            assert_eq!((fast.steps, fast.v_final), (n, v), "cap {cap}");
            assert_eq!(fast.stop, StopReason::StepCap);
        }
    }

    #[test]
    fn trace_has_steps_plus_one_entries() {
        let c = Corner::new(PI / 8.0).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Newtonian(0.5), c)
            .unwrap()
            .with_trace(true);
        let r = run_na(unit(1.0, 0.1), &cfg).unwrap();
        let t = r.trace.as_ref().unwrap();
        assert_eq!(t.len(), r.steps + 1);
        assert_eq!(t[0].zone, r.zone0);
        assert_eq!(t.last().unwrap().xy, r.v_final);
        for (i, e) in t.iter().enumerate() {
            assert_eq!(e.step, i);
        }
    }

    #[test]
    fn step_cap_and_priorities() {
        let c = Corner::new(PI / 64.0).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Newtonian(0.75), c)
            .unwrap()
            .with_max_steps(5)
            .unwrap();
        let r = run_na(unit(1.0, 0.01), &cfg).unwrap();
        assert_eq!((r.steps, r.stop), (5, StopReason::StepCap));

        // ε = 0 on the bisector lands exactly on zero: exit takes priority
        let c = Corner::new(PI / 4.0).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Newtonian(0.0), c).unwrap();
        let r = run_na(VelocityXY::new(1.0, 0.0), &cfg).unwrap();
        assert_eq!((r.steps, r.stop), (1, StopReason::ExitZone));
        assert_eq!(r.norm_final(), 0.0);
    }

    #[test]
    fn na_normalises_input() {
        let c = Corner::new(PI / 6.0).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Newtonian(0.5), c).unwrap();
        let a = run_na(VelocityXY::new(3.0, 0.4), &cfg).unwrap();
        let b = run_na(unit(3.0, 0.4), &cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.v0.norm2() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let c = Corner::new(0.3).unwrap();
        let cfg = RunConfig::new(RestitutionMode::Ideal, c).unwrap();
        assert!(cfg.with_thresholds(-1.0, 0.0).is_err());
        assert!(cfg.with_thresholds(0.0, f64::NAN).is_err());
        assert!(cfg.with_max_steps(0).is_err());
        assert!(RunConfig::new(RestitutionMode::Newtonian(1.5), c).is_err());
        assert!(run_na(VelocityXY::new(f64::NAN, 0.0), &cfg).is_err());
        assert_eq!(cfg.zone_threshold(), 4.440892098500626e-16);
    }

    #[test]
    fn grid_preserves_order_and_reports_index() {
        let c = Corner::new(PI / 4.0).unwrap();
        let defaults = RunConfig::new(RestitutionMode::Ideal, c).unwrap();
        assert!(run_grid(&[], &defaults).unwrap().is_empty());

        let cases = [
            GridCase {
                eps: 1.0,
                alpha: PI / 4.0,
                v0: VelocityXY::new(1.0, 0.0),
            },
            GridCase {
                eps: 0.5,
                alpha: PI / 6.0,
                v0: VelocityXY::new(0.0, 1.0),
            },
        ];
        let out = run_grid(&cases, &defaults).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].zone0, Zone::Z12);
        assert_eq!(out[1].zone0, Zone::Z2);

        let bad = [
            cases[0],
            GridCase {
                eps: 2.0,
                ..cases[1]
            },
        ];
        match run_grid(&bad, &defaults) {
            Err(Error::Grid { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
