mod common;

use common::{env, rng, uniform};
use drpp_core::linalg::dist;
use drpp_core::{wasserstein1_exact, Sample, SampleSpace, ShiftMap, ShiftReference};
use proptest::prelude::*;

fn points(rng: &mut rand_chacha::ChaCha8Rng, n: usize, d: usize, r: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| uniform(rng, d, r)).collect()
}

fn xis(e: &drpp_core::EnvState) -> Vec<Vec<f64>> {
    e.samples().iter().map(|s| s.xi.clone()).collect()
}

fn strategic(theta: &[f64], mask: &[bool]) -> Vec<f64> {
    theta.iter().zip(mask).filter(|(_, m)| **m).map(|(t, _)| *t).collect()
}

#[test]
fn deployed_distributions_attain_the_certificate() {
    let mask = vec![true, false, true, true];
    let space = SampleSpace::new(vec![-100.0; 4], vec![100.0; 4], mask.clone(), false).unwrap();
    let mut r = rng(17);
    let samples = points(&mut r, 64, 4, 1.0).into_iter().map(Sample::unlabeled).collect();
    let e0 = env(samples, &space);
    let eps = 0.7;
    let map = ShiftMap::linear(eps).unwrap();
    assert_eq!(map.sensitivity_certificate(ShiftReference::Base).unwrap(), eps);
    for _ in 0..100 {
        let (a, b) = (uniform(&mut r, 4, 3.0), uniform(&mut r, 4, 3.0));
        let ea = e0.deploy(&a, &map).unwrap();
        let eb = e0.deploy(&b, &map).unwrap();
        assert_eq!(ea.clamped_coords() + eb.clamped_coords(), 0);
        let w = wasserstein1_exact(&xis(&ea), &xis(&eb)).unwrap();
        let want = eps * dist(&strategic(&a, &mask), &strategic(&b, &mask));
        assert!((w - want).abs() <= 1e-9, "W1 {w} vs {want}");
    }
}

#[test]
fn clamping_only_tightens_the_bound() {
    let space = SampleSpace::symmetric(2, 1.0, false).unwrap();
    let mut r = rng(5);
    let samples = points(&mut r, 40, 2, 1.0).into_iter().map(Sample::unlabeled).collect();
    let e0 = env(samples, &space);
    let map = ShiftMap::linear(0.5).unwrap();
    let mut clamped = 0;
    for _ in 0..100 {
        let (a, b) = (uniform(&mut r, 2, 2.0), uniform(&mut r, 2, 2.0));
        let ea = e0.deploy(&a, &map).unwrap();
        let eb = e0.deploy(&b, &map).unwrap();
        clamped += ea.clamped_coords();
        let w = wasserstein1_exact(&xis(&ea), &xis(&eb)).unwrap();
        assert!(w <= 0.5 * dist(&a, &b) + 1e-12);
    }
    assert!(clamped > 0);
}

#[test]
fn compounding_has_no_certificate() {
    let map = ShiftMap::linear(0.5).unwrap();
    assert!(map.sensitivity_certificate(ShiftReference::Compounding).is_err());
    assert_eq!(ShiftMap::Identity.sensitivity_certificate(ShiftReference::Compounding).unwrap(), 0.0);
}

fn cloud(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 2), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(a in cloud(7), b in cloud(7), c in cloud(7)) {
        let ab = wasserstein1_exact(&a, &b).unwrap();
        let ba = wasserstein1_exact(&b, &a).unwrap();
        let bc = wasserstein1_exact(&b, &c).unwrap();
        let ac = wasserstein1_exact(&a, &c).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(wasserstein1_exact(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn permutation_invariant(a in cloud(6), b in cloud(6), k in 0usize..6) {
        let mut p = b.clone();
        p.rotate_left(k);
        let x = wasserstein1_exact(&a, &b).unwrap();
        let y = wasserstein1_exact(&a, &p).unwrap();
        prop_assert!((x - y).abs() <= 1e-12);
    }

    #[test]
    fn translation_costs_its_length(a in cloud(8), v in prop::collection::vec(-3.0..3.0f64, 2)) {
        let b: Vec<Vec<f64>> = a.iter().map(|x| vec![x[0] + v[0], x[1] + v[1]]).collect();
        let w = wasserstein1_exact(&a, &b).unwrap();
        prop_assert!((w - (v[0] * v[0] + v[1] * v[1]).sqrt()).abs() <= 1e-9);
    }
}
