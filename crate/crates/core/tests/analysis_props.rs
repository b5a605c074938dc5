use corner_impact::analysis::{build_h1, build_h2, spectral_radius};
use corner_impact::EigenBranch;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn characteristic_polynomial(eps in 0f64..1.0, beta in -0.999f64..0.999) {
        let h1 = build_h1(eps, beta).unwrap();
        let h2 = build_h2(eps, beta).unwrap();
        let b2 = beta * beta * (1.0 + eps) * (1.0 + eps);
        for h in [h1, h2] {
            prop_assert!((h.trace() - (b2 - 2.0 * eps)).abs() <= 1e-14);
            prop_assert!((h.determinant() - eps * eps).abs() <= 1e-14);
        }
    }

    #[test]
    fn eigenvalue_product(eps in 0f64..1.0, beta in -0.999f64..0.999) {
        let [a, b] = build_h1(eps, beta).unwrap().eigenvalues();
        let p = a * b;
        prop_assert!((p.re - eps * eps).abs() <= 1e-12 && p.im.abs() <= 1e-12);
    }

    #[test]
    fn complex_branch_radius_is_eps(eps in 0.01f64..1.0, beta in -0.999f64..0.999) {
        let h = build_h1(eps, beta).unwrap();
        prop_assume!(h.branch() == EigenBranch::Complex);
        prop_assert!((spectral_radius(&h) - eps).abs() <= 1e-12);
    }
}

#[test]
fn radius_grows_with_beta_on_real_branch() {
    for i in 1..=50 {
        let eps = i as f64 / 51.0;
        let mut prev: Option<f64> = None;
        for j in 1..=200 {
            let beta = j as f64 / 201.0;
            if beta * beta * (1.0 + eps) * (1.0 + eps) <= 4.0 * eps {
                continue;
            }
            let rho = spectral_radius(&build_h1(eps, beta).unwrap());
            if let Some(p) = prev {
                assert!(rho >= p - 1e-12, "eps {eps}, beta {beta}: {rho} < {p}");
            }
            prev = Some(rho);
        }
    }
}
