use std::f64::consts::{FRAC_PI_2, PI};

use corner_impact::geometry::xy_to_xieta;
use corner_impact::rules::{step_newtonian_xieta, step_newtonian_xy, xy_wall1, xy_wall2};
use corner_impact::zones::{classify_exact, classify_thresholded};
use corner_impact::{Corner, VelocityXY, VelocityXiEta, Zone};
use proptest::prelude::*;

fn unit(phi: f64) -> VelocityXY {
    VelocityXY::new(phi.cos(), phi.sin())
}

fn xieta_zone(v: VelocityXY, c: &Corner) -> Zone {
    classify_exact(xy_to_xieta(v, c))
}

/// True when neither `ξ̇` nor `η̇` is within `margin` of zero.
fn off_boundary(v: VelocityXY, c: &Corner, margin: f64) -> bool {
    let q = xy_to_xieta(v, c);
    q.xi_dot.abs() > margin && q.eta_dot.abs() > margin
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn newtonian_steps_lose_energy(phi in -PI..PI, alpha in 0.01f64..1.56, eps in 0f64..0.999) {
        let c = Corner::new(alpha).unwrap();
        let v = unit(phi);
        prop_assume!(off_boundary(v, &c, 1e-6));
        prop_assume!(xieta_zone(v, &c) != Zone::Z0);
        let out = step_newtonian_xy(v, &c, eps).unwrap();
        prop_assert!(out.norm2() < v.norm2(), "{} -> {}", v, out);
    }

    #[test]
    fn mirror_equivariance(phi in -PI..PI, alpha in 0.01f64..1.56, eps in 0f64..=1.0) {
        let c = Corner::new(alpha).unwrap();
        let v = unit(phi);
        prop_assume!(off_boundary(v, &c, 1e-9));
        let a = step_newtonian_xy(v.mirrored(), &c, eps).unwrap();
        let b = step_newtonian_xy(v, &c, eps).unwrap().mirrored();
        prop_assert!((a.vx - b.vx).abs() <= 1e-12 && (a.vy - b.vy).abs() <= 1e-12);
    }

    #[test]
    fn single_impacts_alternate(xi in -1f64..0.0, eta in 1e-9f64..1.0, alpha in 0.01f64..1.56, eps in 0f64..=1.0) {
        let c = Corner::new(alpha).unwrap();
        let v = VelocityXiEta::new(xi, eta);
        let out = step_newtonian_xieta(v, &c, eps).unwrap();
        prop_assert!(matches!(classify_exact(out), Zone::Z2 | Zone::Z0));
        let mirrored = step_newtonian_xieta(v.mirrored(), &c, eps).unwrap();
        prop_assert!(matches!(classify_exact(mirrored), Zone::Z1 | Zone::Z0));
    }

    #[test]
    fn wide_corners_need_one_bounce(
        xi in -1f64..0.0,
        eta in 1e-9f64..1.0,
        alpha in std::f64::consts::FRAC_PI_4..FRAC_PI_2 - 1e-3,
        eps in 0f64..=1.0,
    ) {
        let c = Corner::new(alpha).unwrap();
        prop_assume!(c.k() >= 1.0);
        let v = VelocityXiEta::new(xi, eta);
        prop_assert_eq!(classify_exact(step_newtonian_xieta(v, &c, eps).unwrap()), Zone::Z0);
        prop_assert_eq!(classify_exact(step_newtonian_xieta(v.mirrored(), &c, eps).unwrap()), Zone::Z0);
        // Cartesian form, up to rounding on the boundary
        let xy = v.to_xy(&c);
        let out = step_newtonian_xy(xy, &c, eps).unwrap();
        prop_assert_eq!(classify_thresholded(xy_to_xieta(out, &c), 1e-12).unwrap(), Zone::Z0);
    }

    #[test]
    fn small_change_bounds(xi in -1f64..0.0, eta in 0f64..1.0, alpha in 0.01f64..1.56, eps in 0f64..=1.0) {
        let c = Corner::new(alpha).unwrap();
        let q = VelocityXiEta::new(xi, eta);
        prop_assume!(classify_exact(q) == Zone::Z1);
        let v = q.to_xy(&c);
        let out = xy_wall1(v, &c, eps);
        let slack = 1e-14;
        prop_assert!((out.vx - v.vx).abs() <= eta + slack);
        prop_assert!((out.vy - v.vy).abs() <= 2.0 * eta + slack);
        let m = v.mirrored();
        let out = xy_wall2(m, &c, eps);
        prop_assert!((out.vx - m.vx).abs() <= eta + slack);
        prop_assert!((out.vy - m.vy).abs() <= 2.0 * eta + slack);
    }

    #[test]
    fn perturbations_stay_bounded(
        xi in -1f64..-1e-6,
        eta in 1e-6f64..1.0,
        mirror in any::<bool>(),
        alpha in 0.01f64..1.56,
        eps in 0f64..=1.0,
        dx in -1e-8f64..1e-8,
        dy in -1e-8f64..1e-8,
    ) {
        let c = Corner::new(alpha).unwrap();
        let q = VelocityXiEta::new(xi, eta);
        let v = if mirror { q.mirrored() } else { q }.to_xy(&c);
        let p = VelocityXY::new(v.vx + dx, v.vy + dy);
        let z = xieta_zone(v, &c);
        prop_assume!(xieta_zone(p, &c) == z);
        let a = step_newtonian_xy(v, &c, eps).unwrap();
        let b = step_newtonian_xy(p, &c, eps).unwrap();
        let bound = dx.abs() + dy.abs() + 1e-15;
        prop_assert!((a.vx - b.vx).abs() <= bound && (a.vy - b.vy).abs() <= bound);
    }
}
