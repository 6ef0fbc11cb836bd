//! Oracle and invariant checks on small synthetic instances.
//!
//! Each check compares the library against something computed
//! independently here: closed-form algebra, brute-force grids, or central
//! differences.

use std::fmt;
use std::sync::Arc;

use drpp_core::linalg::{dist, norm};
use drpp_core::{
    contraction_rm, run, Algorithm, ArgminConfig, BatchSize, EnvState, InnerSolveConfig, LipschitzConstants,
    LossKind, LossModel, ParamSpace, PenaltyFunction, PenaltyKind, RegularityLedger, RobustProblem, RunConfig,
    Sample, ShiftMap, ShiftReference,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::synth::{synth_instance_with, SynthInstance, SynthKind, WIDE_BOX};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{tag} {:<32} {}", self.name, self.detail)
    }
}

/// Problem built from the loss and penalty the instance was designed for.
pub fn synth_problem(inst: &SynthInstance) -> anyhow::Result<RobustProblem> {
    let d = inst.dataset.dim();
    let theta_space = ParamSpace::origin_ball(d, inst.theta_radius)?;
    let loss = LossModel::analytic(inst.loss.clone(), &theta_space, &inst.sample_space)?;
    let penalty = PenaltyFunction::new(inst.penalty.clone(), &theta_space)?;
    Ok(RobustProblem::new(loss, penalty, theta_space, inst.sample_space.clone())?)
}

pub fn synth_env(inst: &SynthInstance, seed: u64) -> anyhow::Result<EnvState> {
    Ok(EnvState::new(
        Arc::new(inst.dataset.clone()),
        inst.sample_space.clone(),
        seed,
        ShiftReference::Base,
    )?)
}

/// Tight run settings for reference solves.
pub fn tight_config(epsilon_sens: f64, outer_iters: usize) -> RunConfig {
    RunConfig {
        outer_iters,
        inner: InnerSolveConfig::with_tol(1e-12),
        argmin: ArgminConfig {
            tol: 1e-12,
            max_iters: 1_000_000,
        },
        eta: 1e-2,
        batch: BatchSize::Full,
        seed: 0,
        shift: ShiftMap::LinearStrategic { epsilon_sens },
        early_stop_tol: 1e-13,
        record_wall_time: false,
    }
}

/// Sensitivity that puts the certified RRM contraction at `kappa`.
pub fn epsilon_for_kappa(ledger: &RegularityLedger, kappa: f64) -> anyhow::Result<f64> {
    let lip = LipschitzConstants::from_ledger(ledger)?;
    anyhow::ensure!(lip.gamma > 0.0 && lip.f_theta_xi > 0.0, "instance has no certified contraction");
    Ok(kappa * lip.gamma / lip.f_theta_xi)
}

/// Maximizer of `phi` over the perturbable coordinates by a dense grid on
/// `[-b, b]^k` (k <= 2) followed by a fine local grid.
pub fn grid_argmax(problem: &RobustProblem, theta: &[f64], xi: &Sample, b: f64) -> anyhow::Result<(Vec<f64>, f64)> {
    let free: Vec<usize> = problem
        .sample_space
        .strategic_mask()
        .iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(j, _)| j)
        .collect();
    anyhow::ensure!(free.len() <= 2, "grid oracle supports at most 2 free coordinates");
    let lo: Vec<f64> = free.iter().map(|&j| problem.sample_space.lo()[j].max(-b)).collect();
    let hi: Vec<f64> = free.iter().map(|&j| problem.sample_space.hi()[j].min(b)).collect();
    let eval = |pt: &[f64]| -> anyhow::Result<f64> {
        let mut z = xi.xi.clone();
        for (k, &j) in free.iter().enumerate() {
            z[j] = pt[k];
        }
        Ok(problem.phi(theta, xi, &z)?)
    };
    let mut best: (Vec<f64>, f64) = (Vec::new(), f64::NEG_INFINITY);
    let mut centre: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let mut half: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (h - l)).collect();
    // each pass scans a grid around the incumbent and shrinks the window
    for pass in 0..4 {
        let steps = if free.len() == 1 { 4000 } else { 300 };
        let h: Vec<f64> = half.iter().map(|w| 2.0 * w / steps as f64).collect();
        let axis = |k: usize, i: usize| (centre[k] - half[k] + i as f64 * h[k]).clamp(lo[k], hi[k]);
        let mut pass_best = (centre.clone(), f64::NEG_INFINITY);
        if free.len() == 1 {
            for i in 0..=steps {
                let p = [axis(0, i)];
                let v = eval(&p)?;
                if v > pass_best.1 {
                    pass_best = (p.to_vec(), v);
                }
            }
        } else if free.len() == 2 {
            for i in 0..=steps {
                for k in 0..=steps {
                    let p = [axis(0, i), axis(1, k)];
                    let v = eval(&p)?;
                    if v > pass_best.1 {
                        pass_best = (p.to_vec(), v);
                    }
                }
            }
        } else {
            pass_best = (Vec::new(), eval(&[])?);
        }
        if pass_best.1 > best.1 {
            best = pass_best;
        }
        centre = best.0.clone();
        half = h.iter().map(|s| s * if pass == 0 { 4.0 } else { 10.0 }).collect();
    }
    let mut z = xi.xi.clone();
    for (k, &j) in free.iter().enumerate() {
        z[j] = best.0[k];
    }
    Ok((z, best.1))
}

/// Central differences of `theta -> f(theta, xi)`.
pub fn fd_grad(
    problem: &RobustProblem,
    theta: &[f64],
    xi: &Sample,
    cfg: &InnerSolveConfig,
    ledger: &RegularityLedger,
    h: f64,
) -> anyhow::Result<Vec<f64>> {
    let mut g = vec![0.0; theta.len()];
    for j in 0..theta.len() {
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[j] += h;
        tm[j] -= h;
        let fp = problem.surrogate_f(&tp, xi, cfg, ledger)?;
        let fm = problem.surrogate_f(&tm, xi, cfg, ledger)?;
        g[j] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

fn random_theta(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-r..r)).collect()
}

fn danskin_check(problem: &RobustProblem, inst: &SynthInstance, seed: u64, points: usize) -> anyhow::Result<Check> {
    let ledger = problem.ledger(0.0)?;
    let cfg = InnerSolveConfig::with_tol(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = problem.dim();
    let mut worst: f64 = 0.0;
    for k in 0..points {
        let theta = random_theta(&mut rng, d, 1.0);
        let xi = &inst.dataset.samples()[k % inst.dataset.len()];
        let sol = problem.solve_inner(&theta, xi, &cfg, &ledger, None)?;
        let g = problem.danskin_grad(&theta, xi, &sol)?;
        let fd = fd_grad(problem, &theta, xi, &cfg, &ledger, 1e-5)?;
        let rel = dist(&g, &fd) / norm(&fd).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(Check::new(
        "danskin-vs-central-differences",
        worst <= 1e-4,
        format!("max relative error {worst:.3e} over {points} points (tol 1e-4)"),
    ))
}

fn quadratic_suite() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let inst = synth_instance_with(SynthKind::Quadratic, 3, 40, 11, 0.5, WIDE_BOX)?;
    let problem = synth_problem(&inst)?;
    let ledger0 = problem.ledger(0.0)?;
    let LossKind::QuadraticSynthetic { .. } = inst.loss else {
        anyhow::bail!("quadratic instance carries a non-quadratic loss");
    };
    let PenaltyKind::Constant { lambda_c } = inst.penalty else {
        anyhow::bail!("quadratic instance expects a constant multiplier");
    };

    // inner maximizer: z = (2 lambda xi - theta) / (2 lambda - 1)
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = InnerSolveConfig::with_tol(1e-12);
    let mut worst: f64 = 0.0;
    for xi in inst.dataset.samples() {
        let theta = random_theta(&mut rng, 3, 2.0);
        let sol = problem.solve_inner(&theta, xi, &cfg, &ledger0, None)?;
        let z: Vec<f64> = xi
            .xi
            .iter()
            .zip(&theta)
            .map(|(x, t)| (2.0 * lambda_c * x - t) / (2.0 * lambda_c - 1.0))
            .collect();
        worst = worst.max(dist(&sol.z, &z));
    }
    out.push(Check::new(
        "inner-closed-form",
        worst <= 1e-8,
        format!("max |z - z*| = {worst:.3e} (tol 1e-8)"),
    ));

    // stable point against the fixed-point algebra, dims 1 and 3
    for dim in [1usize, 3] {
        let inst = synth_instance_with(SynthKind::Quadratic, dim, 50, 3 + dim as u64, 0.5, WIDE_BOX)?;
        let problem = synth_problem(&inst)?;
        let eps = epsilon_for_kappa(&problem.ledger(0.0)?, 0.5)?;
        let ledger = problem.ledger(eps)?;
        let env = synth_env(&inst, 0)?;
        let tr = run(Algorithm::Rrm, &problem, &env, &vec![0.0; dim], &tight_config(eps, 200), &ledger);
        let expect = inst
            .closed_form_stable_point(lambda_c, eps)
            .ok_or_else(|| anyhow::anyhow!("no closed form"))?;
        let err = dist(tr.final_theta(), &expect);
        out.push(Check::new(
            &format!("rrm-limit-closed-form-d{dim}"),
            tr.error.is_none() && err <= 1e-8,
            format!("|theta_T - theta_s| = {err:.3e} after {} rounds (tol 1e-8)", tr.records.len()),
        ));
    }

    // measured contraction against the certificate
    let eps = epsilon_for_kappa(&ledger0, 0.5)?;
    let ledger = problem.ledger(eps)?;
    let lip = LipschitzConstants::from_ledger(&ledger)?;
    let kappa = contraction_rm(&lip, eps, 1e-12)?.kappa;
    let expect = inst.closed_form_stable_point(lambda_c, eps).expect("quadratic closed form");
    let env = synth_env(&inst, 0)?;
    let theta0 = vec![3.0, -2.0, 1.0];
    let tr = run(Algorithm::Rrm, &problem, &env, &theta0, &tight_config(eps, 12), &ledger);
    let mut prev = dist(&theta0, &expect);
    let mut max_ratio: f64 = 0.0;
    for r in &tr.records {
        let cur = dist(&r.theta, &expect);
        if prev > 1e-9 {
            max_ratio = max_ratio.max(cur / prev);
        }
        prev = cur;
    }
    out.push(Check::new(
        "rrm-contraction-certificate",
        max_ratio <= kappa + 0.05,
        format!("max ratio {max_ratio:.4} vs kappa_rm {kappa:.4}"),
    ));

    out.push(danskin_check(&problem, &inst, 9, 20)?);
    Ok(out)
}

fn linear_suite() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let inst = synth_instance_with(SynthKind::Linear, 2, 40, 21, 0.5, WIDE_BOX)?;
    let problem = synth_problem(&inst)?;
    let ledger0 = problem.ledger(0.0)?;
    let PenaltyKind::Constant { lambda_c } = inst.penalty else {
        anyhow::bail!("linear instance expects a constant multiplier");
    };

    // closed form vs iterative ascent
    let exact = InnerSolveConfig::with_tol(0.0);
    let iterative = InnerSolveConfig {
        closed_form: false,
        ..InnerSolveConfig::with_tol(1e-12)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for xi in inst.dataset.samples() {
        let theta = random_theta(&mut rng, 2, 3.0);
        let a = problem.solve_inner(&theta, xi, &exact, &ledger0, None)?;
        let b = problem.solve_inner(&theta, xi, &iterative, &ledger0, None)?;
        worst = worst.max(dist(&a.z, &b.z));
    }
    out.push(Check::new(
        "inner-closed-form-vs-ascent",
        worst <= 1e-6,
        format!("max |z_exact - z_ascent| = {worst:.3e} (tol 1e-6)"),
    ));

    // RRM and RGD limits with the exact inner solve
    let eps = 0.3;
    let ledger = problem.ledger(eps)?;
    let env = synth_env(&inst, 0)?;
    let mut cfg = tight_config(eps, 400);
    cfg.inner = exact;
    let rrm = run(Algorithm::Rrm, &problem, &env, &[0.0, 0.0], &cfg, &ledger);
    cfg.eta = 0.5;
    cfg.outer_iters = 4000;
    let rgd = run(Algorithm::Rgd, &problem, &env, &[0.0, 0.0], &cfg, &ledger);
    let gap = dist(rrm.final_theta(), rgd.final_theta());
    out.push(Check::new(
        "rrm-rgd-limits-agree",
        rrm.error.is_none() && rgd.error.is_none() && gap <= 1e-6,
        format!("|theta_rrm - theta_rgd| = {gap:.3e} (tol 1e-6)"),
    ));
    let expect = inst.closed_form_stable_point(lambda_c, eps).expect("linear closed form");
    let err = dist(rrm.final_theta(), &expect);
    out.push(Check::new(
        "rrm-limit-closed-form",
        err <= 1e-8,
        format!("|theta_T - theta_s| = {err:.3e} (tol 1e-8)"),
    ));
    Ok(out)
}

fn logistic_suite() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut worst_phi: f64 = 0.0;
    let mut count = 0;
    for dim in [1usize, 2] {
        let mut inst = synth_instance_with(SynthKind::LogisticGaussian, dim, 30, 40 + dim as u64, 0.5, 3.0)?;
        inst.penalty = PenaltyKind::Constant { lambda_c: 30.0 };
        inst.loss = LossKind::Logistic;
        // every feature perturbable, intercept fixed
        let mask: Vec<bool> = (0..=dim).map(|j| j < dim).collect();
        inst.sample_space = drpp_core::SampleSpace::new(
            inst.sample_space.lo().to_vec(),
            inst.sample_space.hi().to_vec(),
            mask,
            true,
        )?;
        let problem = synth_problem(&inst)?;
        let ledger = problem.ledger(0.0)?;
        let cfg = InnerSolveConfig::with_tol(1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        for xi in inst.dataset.samples().iter().take(10) {
            let theta = random_theta(&mut rng, dim + 1, 4.0);
            let sol = problem.solve_inner(&theta, xi, &cfg, &ledger, None)?;
            let (z, v) = grid_argmax(&problem, &theta, xi, 3.0)?;
            worst_z = worst_z.max(dist(&sol.z, &z));
            worst_phi = worst_phi.max((sol.phi_value - v).abs());
            count += 1;
        }
    }
    out.push(Check::new(
        "inner-vs-grid",
        worst_z <= 2e-3 && worst_phi <= 1e-6,
        format!("{count} instances, max |dz| {worst_z:.3e} (tol 2e-3), max |dphi| {worst_phi:.3e} (tol 1e-6)"),
    ));

    let inst = synth_instance_with(SynthKind::LogisticGaussian, 3, 30, 8, 0.5, 3.0)?;
    let problem = synth_problem(&inst)?;
    out.push(danskin_check(&problem, &inst, 4, 20)?);
    Ok(out)
}

/// Runs the suite for one instance family.
pub fn validate(kind: SynthKind) -> anyhow::Result<Vec<Check>> {
    match kind {
        SynthKind::Quadratic => quadratic_suite(),
        SynthKind::Linear => linear_suite(),
        SynthKind::LogisticGaussian => logistic_suite(),
    }
}
