mod common;

use common::{env, mean, quadratic, rng, tight, unlabeled};
use drpp_core::linalg::dist;
use drpp_core::{
    contraction_gd, contraction_rm, run, Algorithm, InnerSolveConfig, LipschitzConstants, RobustProblem, StepRule,
    StopReason,
};

const LAMBDA: f64 = 50.0;
const RIDGE: f64 = 1.0;

struct Setup {
    p: RobustProblem,
    e: drpp_core::EnvState,
    eps: f64,
    theta_s: Vec<f64>,
    lip: LipschitzConstants,
}

/// Quadratic instance with the sensitivity chosen so that `kappa_rm = 0.5`.
fn setup() -> Setup {
    let d = 3;
    let p = quadratic(d, LAMBDA, RIDGE, 10.0);
    let lip = LipschitzConstants::from_ledger(&p.ledger(0.0).unwrap()).unwrap();
    let eps = 0.5 * lip.gamma / lip.f_theta_xi;
    let samples = unlabeled(&mut rng(4), 50, d, 1.0);
    let xbar = mean(&samples);
    let e = env(samples, &p.sample_space);
    // theta = mean z / (1 + ridge), z = (2 lambda (x - eps theta) - theta) / (2 lambda - 1)
    let a = 1.0 + RIDGE;
    let denom = (2.0 * LAMBDA - 1.0) * a + 2.0 * LAMBDA * eps + 1.0;
    let theta_s = xbar.iter().map(|x| 2.0 * LAMBDA * x / denom).collect();
    Setup { p, e, eps, theta_s, lip }
}

fn ratios(theta0: &[f64], thetas: &[Vec<f64>], target: &[f64], floor: f64) -> Vec<f64> {
    let mut prev = dist(theta0, target);
    let mut out = Vec::new();
    for t in thetas {
        let cur = dist(t, target);
        if prev > floor {
            out.push(cur / prev);
        }
        prev = cur;
    }
    out
}

#[test]
fn rrm_rate_within_certificate() {
    let s = setup();
    let kappa = contraction_rm(&s.lip, s.eps, 0.0).unwrap().kappa;
    assert!((kappa - 0.5).abs() < 1e-12);
    let ledger = s.p.ledger(s.eps).unwrap();
    let theta0 = [3.0, -2.0, 1.0];
    let tr = run(Algorithm::Rrm, &s.p, &s.e, &theta0, &tight(s.eps, 40), &ledger);
    assert!(tr.error.is_none());
    let thetas: Vec<Vec<f64>> = tr.records.iter().map(|r| r.theta.clone()).collect();
    let r = ratios(&theta0, &thetas, &s.theta_s, 1e-9);
    assert!(r.len() > 5);
    for (t, q) in r.iter().enumerate().skip(2) {
        assert!(*q <= kappa + 0.05, "t={t}: ratio {q} vs kappa {kappa}");
    }
    assert!(dist(tr.final_theta(), &s.theta_s) < 1e-9);
}

#[test]
fn rrm_residual_within_neighborhood() {
    let s = setup();
    let ledger = s.p.ledger(s.eps).unwrap();
    let smooth = 2.0 * LAMBDA - 1.0;
    for tol in [1e-3, 1e-6] {
        let rm = contraction_rm(&s.lip, s.eps, tol).unwrap();
        let mut cfg = tight(s.eps, 60);
        cfg.inner = InnerSolveConfig {
            step_rule: StepRule::Fixed { step: 0.2 / smooth },
            ..InnerSolveConfig::with_tol(tol)
        };
        let tr = run(Algorithm::Rrm, &s.p, &s.e, &[3.0, -2.0, 1.0], &cfg, &ledger);
        assert!(tr.error.is_none());
        let resid = dist(tr.final_theta(), &s.theta_s);
        let bound = rm.neighborhood.unwrap() + 1e-8;
        assert!(resid <= bound, "tol {tol}: residual {resid} > {bound}");
    }
}

#[test]
fn rgd_rate_within_certificate() {
    let s = setup();
    let ledger = s.p.ledger(s.eps).unwrap();
    let bound = contraction_gd(&s.lip, s.eps, 1e-12, 1.0).eta_bound;
    assert!(bound > 0.0);
    let eta = 0.5 * bound;
    let gd = contraction_gd(&s.lip, s.eps, 1e-12, eta);
    assert!(gd.kappa < 1.0);
    let mut cfg = tight(s.eps, 400);
    cfg.eta = eta;
    let theta0 = [3.0, -2.0, 1.0];
    let tr = run(Algorithm::Rgd, &s.p, &s.e, &theta0, &cfg, &ledger);
    assert!(tr.error.is_none() && !tr.eta_flagged);
    let thetas: Vec<Vec<f64>> = tr.records.iter().map(|r| r.theta.clone()).collect();
    let r = ratios(&theta0, &thetas, &s.theta_s, 1e-8);
    assert!(r.len() > 10);
    let worst = r.iter().cloned().fold(0.0, f64::max);
    assert!(worst <= gd.kappa + 0.05, "rate {worst} vs kappa_gd {}", gd.kappa);
    assert!(dist(tr.final_theta(), &s.theta_s) < 1e-6);

    cfg.eta = 1.5 * bound;
    cfg.outer_iters = 50;
    let tr = run(Algorithm::Rgd, &s.p, &s.e, &theta0, &cfg, &ledger);
    assert!(tr.error.is_none());
    assert!(tr.eta_flagged);
    assert_ne!(tr.stop_reason, StopReason::Error);
    assert!(!tr.records.is_empty());
}
