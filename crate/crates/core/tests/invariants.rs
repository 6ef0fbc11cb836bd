mod common;

use common::{logistic, quadratic, uniform};
use drpp_core::linalg::norm;
use drpp_core::{
    contraction_gd, detection_rate, transport_cost, InnerSolveConfig, LipschitzConstants, ParamSpace, Sample,
};
use proptest::prelude::*;
use rand::SeedableRng;

fn vec_in(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ball_projection_is_idempotent(v in vec_in(3, 10.0)) {
        let ball = ParamSpace::origin_ball(3, 2.0).unwrap();
        let p = ball.project(&v).unwrap();
        prop_assert!(norm(&p) <= 2.0 + 1e-12);
        prop_assert_eq!(ball.project(&p).unwrap(), p);
    }

    #[test]
    fn transport_cost_is_a_squared_norm(a in vec_in(3, 5.0), b in vec_in(3, 5.0)) {
        let c = transport_cost(&a, &b).unwrap();
        prop_assert!(c >= 0.0);
        prop_assert!((c - transport_cost(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(transport_cost(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn inner_solution_dominates_feasible_points(
        theta in vec_in(2, 2.0),
        xi in vec_in(2, 3.0),
        y in 0u8..2,
        seed in 0u64..1000,
    ) {
        let p = logistic(2, 5.0, 3.0, 3.0);
        let ledger = p.ledger(0.0).unwrap();
        let s = Sample::labeled(xi.clone(), y);
        let sol = p.solve_inner(&theta, &s, &InnerSolveConfig::with_tol(1e-10), &ledger, None).unwrap();
        prop_assert!(p.sample_space.contains(&sol.z));
        prop_assert!(sol.certified_gap <= 1e-10);
        prop_assert!(sol.phi_value >= p.phi(&theta, &s, &xi).unwrap() - 1e-12);
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let z = uniform(&mut r, 2, 3.0);
            prop_assert!(sol.phi_value >= p.phi(&theta, &s, &z).unwrap() - 1e-9);
        }
    }

    #[test]
    fn surrogate_dominates_plain_loss(theta in vec_in(2, 3.0), xi in vec_in(2, 1.0)) {
        // f(theta, xi) >= phi(theta, xi, xi) = l(theta, xi)
        let p = quadratic(2, 3.0, 0.5, 10.0);
        let ledger = p.ledger(0.0).unwrap();
        let s = Sample::unlabeled(xi.clone());
        let f = p.surrogate_f(&theta, &s, &InnerSolveConfig::with_tol(1e-12), &ledger).unwrap();
        prop_assert!(f >= p.loss.value(&theta, &xi, None).unwrap() - 1e-12);
    }

    #[test]
    fn detection_rate_is_a_fraction(theta in vec_in(2, 3.0), pts in prop::collection::vec((vec_in(2, 3.0), 0u8..2), 1..30)) {
        let samples: Vec<Sample> = pts.into_iter().map(|(x, y)| Sample::labeled(x, y)).collect();
        let d = detection_rate(&theta, &samples).unwrap();
        if d.defined {
            prop_assert!((0.0..=1.0).contains(&d.rate));
            prop_assert!(d.detected <= d.positives);
        } else {
            prop_assert!(d.rate.is_nan());
        }
    }

    #[test]
    fn gd_contracts_below_the_step_bound(frac in 0.01..0.99f64, eps in 0.0..0.2f64) {
        let p = quadratic(2, 50.0, 1.0, 10.0);
        let lip = LipschitzConstants::from_ledger(&p.ledger(eps).unwrap()).unwrap();
        let bound = contraction_gd(&lip, eps, 0.0, 1.0).eta_bound;
        prop_assume!(bound > 0.0);
        prop_assert!(contraction_gd(&lip, eps, 0.0, frac * bound).kappa < 1.0);
        prop_assert!(contraction_gd(&lip, eps, 0.0, (1.0 + frac) * bound).kappa >= 1.0);
    }
}
