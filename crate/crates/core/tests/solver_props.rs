use std::f64::consts::PI;

use corner_impact::solvers::{run_na, run_ta};
use corner_impact::VelocityXY;
use corner_impact::{Corner, RestitutionMode, RunConfig, StopReason, Zone};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EPS_GRID: [f64; 7] = [1.0, 0.95, 0.75, 0.5, 0.25, 0.05, 0.0];
const ALPHA_DIVISORS: [f64; 7] = [4.0, 6.0, 8.0, 12.0, 16.0, 32.0, 64.0];

fn grid_mode() -> impl Strategy<Value = RestitutionMode> {
    prop::sample::select(EPS_GRID.to_vec())
        .prop_map(|e| RestitutionMode::from_coefficient(e).unwrap())
}

fn grid_corner() -> impl Strategy<Value = Corner> {
    prop::sample::select(ALPHA_DIVISORS.to_vec()).prop_map(|n| Corner::new(PI / n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn multiple_impact_only_first(phi in -PI..PI, mode in grid_mode(), c in grid_corner()) {
        let v0 = VelocityXY::new(phi.cos(), phi.sin());
        let cfg = RunConfig::new(mode, c).unwrap().with_trace(true);
        let r = run_na(v0, &cfg).unwrap();
        let trace = r.trace.unwrap();
        for entry in &trace[1..] {
            prop_assert_ne!(entry.zone, Zone::Z12, "step {}", entry.step);
        }
    }

    #[test]
    fn norm_decreases_along_trace(phi in -PI..PI, eps in 0f64..0.999, c in grid_corner()) {
        let v0 = VelocityXY::new(phi.cos(), phi.sin());
        let cfg = RunConfig::new(RestitutionMode::newtonian(eps).unwrap(), c).unwrap().with_trace(true);
        let trace = run_na(v0, &cfg).unwrap().trace.unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1].xy.norm2() < w[0].xy.norm2(), "step {}", w[0].step);
        }
    }
}

#[test]
fn ideal_runs_terminate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let c = Corner::new(PI / ALPHA_DIVISORS[rng.gen_range(0..7)]).unwrap();
        let phi = rng.gen_range(-PI..PI);
        let r = run_ta(
            VelocityXY::new(phi.cos(), phi.sin()),
            RestitutionMode::Ideal,
            c,
            1_000_000,
            false,
        )
        .unwrap();
        assert_eq!(r.stop, StopReason::ExitZone);
    }
}

#[test]
fn theoretical_and_numerical_stay_close() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let tol = f64::max(10.0 * 1e-12, 1e-10);
    for _ in 0..10_000 {
        let mode = RestitutionMode::from_coefficient(EPS_GRID[rng.gen_range(0..7)]).unwrap();
        let c = Corner::new(PI / ALPHA_DIVISORS[rng.gen_range(0..7)]).unwrap();
        let phi = rng.gen_range(-PI..PI);
        let v0 = VelocityXY::new(phi.cos(), phi.sin());
        let ta = run_ta(v0, mode, c, 1_000_000, false).unwrap();
        let na = run_na(v0, &RunConfig::new(mode, c).unwrap()).unwrap();
        let same_path = ta.stop == na.stop && ta.steps == na.steps;
        let dx = (ta.v_final.vx - na.v_final.vx).abs();
        let dy = (ta.v_final.vy - na.v_final.vy).abs();
        assert!(
            same_path || (dx <= tol && dy <= tol),
            "{v0} {mode:?} alpha {}: ta {:?} na {:?}",
            c.alpha(),
            ta,
            na
        );
    }
}
