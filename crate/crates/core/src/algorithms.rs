//! Retraining loops: robust repeated risk minimization (RRM), robust repeated
//! gradient descent (RGD), their non-robust counterparts (adversary switched
//! off, `z = xi`) and a static baseline trained once on the base data.
//!
//! Per-sample inner problems run on the ambient rayon pool. Every reduction
//! over a batch is done in index order on fixed-size chunks, so results do
//! not depend on the number of threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{contraction_gd, LipschitzConstants};
use crate::env::{BatchSize, EnvState, ShiftMap};
use crate::error::{ensure_dim, DrppError, Result};
use crate::inner::{InnerSolution, InnerSolveConfig, RobustProblem};
use crate::ledger::RegularityLedger;
use crate::linalg::{axpy, dist};
use crate::metrics::evaluate;
use crate::space::Sample;

const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rrm,
    Rgd,
    PpRrm,
    PpRgd,
    Static,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Rrm,
        Algorithm::Rgd,
        Algorithm::PpRrm,
        Algorithm::PpRgd,
        Algorithm::Static,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rrm => "rrm",
            Algorithm::Rgd => "rgd",
            Algorithm::PpRrm => "pp_rrm",
            Algorithm::PpRgd => "pp_rgd",
            Algorithm::Static => "static",
        }
    }

    pub fn is_robust(self) -> bool {
        matches!(self, Algorithm::Rrm | Algorithm::Rgd)
    }

    pub fn is_gradient(self) -> bool {
        matches!(self, Algorithm::Rgd | Algorithm::PpRgd)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = DrppError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| DrppError::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

/// Projected gradient descent for the frozen retraining objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgminConfig {
    /// Stop when the gradient-mapping norm is at most this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ArgminConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub outer_iters: usize,
    pub inner: InnerSolveConfig,
    pub argmin: ArgminConfig,
    /// RGD step size.
    pub eta: f64,
    pub batch: BatchSize,
    pub seed: u64,
    pub shift: ShiftMap,
    pub early_stop_tol: f64,
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            outer_iters: 20,
            inner: InnerSolveConfig::default(),
            argmin: ArgminConfig::default(),
            eta: 1e-2,
            batch: BatchSize::Full,
            seed: 0,
            shift: ShiftMap::Identity,
            early_stop_tol: 1e-12,
            record_wall_time: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        self.shift.validate()?;
        if self.outer_iters == 0 {
            return Err(DrppError::InvalidArgument("outer_iters must be >= 1".into()));
        }
        if !(self.argmin.tol > 0.0) || self.argmin.max_iters == 0 {
            return Err(DrppError::InvalidArgument(format!("argmin config {:?}", self.argmin)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(DrppError::InvalidArgument(format!("eta = {}", self.eta)));
        }
        if !(self.early_stop_tol >= 0.0) {
            return Err(DrppError::InvalidArgument("early_stop_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub batch_size: usize,
    pub inner_gap_max: f64,
    pub inner_iters_mean: f64,
    pub inner_iters_max: usize,
    /// Mean transport cost of the adversarial points.
    pub mean_cost: f64,
    pub argmin_iters: usize,
    pub argmin_grad_map: f64,
    pub clamped_coords: usize,
}

/// Result of one outer step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub theta_next: Vec<f64>,
    pub diagnostics: StepDiagnostics,
    pub batch: Vec<Sample>,
    pub solutions: Vec<InnerSolution>,
}

fn nominal(xi: &Sample, problem: &RobustProblem, theta: &[f64]) -> InnerSolution {
    InnerSolution {
        z: xi.xi.clone(),
        phi_value: problem.loss.value_unchecked(theta, &xi.xi, xi.y().unwrap_or(0.0)),
        certified_gap: 0.0,
        ascent_iters_used: 0,
    }
}

/// Inner maximizers for every sample, in batch order.
pub fn solve_batch(
    problem: &RobustProblem,
    batch: &[Sample],
    theta: &[f64],
    inner: &InnerSolveConfig,
    ledger: &RegularityLedger,
    robust: bool,
    warm: Option<&[InnerSolution]>,
) -> Result<Vec<InnerSolution>> {
    if !robust {
        return Ok(batch.iter().map(|s| nominal(s, problem, theta)).collect());
    }
    let warm = warm.filter(|w| w.len() == batch.len());
    let results: Vec<Result<InnerSolution>> = batch
        .par_iter()
        .enumerate()
        .map(|(i, s)| problem.solve_inner(theta, s, inner, ledger, warm.map(|w| w[i].z.as_slice())))
        .collect();
    results.into_iter().collect()
}

fn diagnostics(problem: &RobustProblem, batch: &[Sample], sols: &[InnerSolution]) -> (StepDiagnostics, Vec<f64>) {
    let costs: Vec<f64> = batch
        .iter()
        .zip(sols)
        .map(|(s, z)| problem.sample_space.cost_unchecked(&s.xi, &z.z))
        .collect();
    let n = batch.len() as f64;
    let d = StepDiagnostics {
        batch_size: batch.len(),
        inner_gap_max: sols.iter().map(|s| s.certified_gap).fold(0.0, f64::max),
        inner_iters_mean: sols.iter().map(|s| s.ascent_iters_used as f64).sum::<f64>() / n,
        inner_iters_max: sols.iter().map(|s| s.ascent_iters_used).max().unwrap_or(0),
        mean_cost: costs.iter().sum::<f64>() / n,
        ..StepDiagnostics::default()
    };
    (d, costs)
}

/// `sum_i w * grad_theta l(theta, z_i)` with a thread-count independent
/// summation order.
fn summed_loss_grad(problem: &RobustProblem, batch: &[Sample], zs: &[&[f64]], theta: &[f64], w: f64) -> Vec<f64> {
    let dim = theta.len();
    let partials: Vec<Vec<f64>> = (0..batch.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut g = vec![0.0; dim];
            for i in c * CHUNK..((c + 1) * CHUNK).min(batch.len()) {
                problem
                    .loss
                    .add_grad_theta(theta, zs[i], batch[i].y().unwrap_or(0.0), w, &mut g);
            }
            g
        })
        .collect();
    let mut g = vec![0.0; dim];
    for p in &partials {
        axpy(1.0, p, &mut g);
    }
    g
}

/// `argmin_{theta in Theta} mean_i l(theta, z_i) - lambda(theta) mean_i c_i`
/// with the `z_i` frozen. Returns `(theta, iterations, gradient mapping)`.
fn frozen_argmin(
    problem: &RobustProblem,
    batch: &[Sample],
    sols: &[InnerSolution],
    mean_cost: f64,
    start: &[f64],
    cfg: &crate::algorithms::ArgminConfig,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = batch.len() as f64;
    let zs: Vec<&[f64]> = sols.iter().map(|s| s.z.as_slice()).collect();
    let smooth = problem.loss.batch_theta_smoothness(zs.iter().copied()) + problem.penalty.bounds.h_lambda * mean_cost;
    let step = if smooth > 0.0 { 1.0 / smooth } else { 1.0 };
    let mut theta = problem.theta_space.project(start)?;
    let mut grad_map = f64::INFINITY;
    for iter in 0..cfg.max_iters {
        let mut g = summed_loss_grad(problem, batch, &zs, &theta, 1.0 / n);
        problem.penalty.add_grad(&theta, -mean_cost, &mut g);
        let mut next = theta.clone();
        axpy(-step, &g, &mut next);
        let next = problem.theta_space.project_unchecked(&next);
        grad_map = dist(&next, &theta) / step;
        if grad_map <= cfg.tol {
            return Ok((theta, iter, grad_map));
        }
        theta = next;
    }
    Err(DrppError::NotConverged {
        solver: "retraining argmin",
        iters: cfg.max_iters,
        gap: grad_map,
        best: theta,
    })
}

fn check_theta(problem: &RobustProblem, env: &EnvState, theta: &[f64]) -> Result<()> {
    ensure_dim("theta", problem.dim(), theta.len())?;
    ensure_dim("environment", problem.dim(), env.space().dim())
}

fn draw(env: &EnvState, cfg: &RunConfig) -> Result<Vec<Sample>> {
    env.draw_batch(cfg.batch, cfg.seed)
}

/// One RRM step on `env`: solve the inner problems at `theta_t`, then
/// minimize the batch objective with the adversarial points held fixed.
/// With `robust = false` the adversary is switched off (`z = xi`).
pub fn rrm_step(
    problem: &RobustProblem,
    env: &EnvState,
    theta_t: &[f64],
    cfg: &RunConfig,
    ledger: &RegularityLedger,
    robust: bool,
    warm: Option<&[InnerSolution]>,
) -> Result<Step> {
    check_theta(problem, env, theta_t)?;
    let batch = draw(env, cfg)?;
    let sols = solve_batch(problem, &batch, theta_t, &cfg.inner, ledger, robust, warm)?;
    let (mut d, _) = diagnostics(problem, &batch, &sols);
    let (theta_next, iters, gm) = frozen_argmin(problem, &batch, &sols, d.mean_cost, theta_t, &cfg.argmin)?;
    d.argmin_iters = iters;
    d.argmin_grad_map = gm;
    d.clamped_coords = env.clamped_coords();
    Ok(Step {
        theta_next,
        diagnostics: d,
        batch,
        solutions: sols,
    })
}

/// One RGD step: `Proj(theta_t - eta * mean_i danskin_grad_i)`.
pub fn rgd_step(
    problem: &RobustProblem,
    env: &EnvState,
    theta_t: &[f64],
    cfg: &RunConfig,
    ledger: &RegularityLedger,
    robust: bool,
    warm: Option<&[InnerSolution]>,
) -> Result<Step> {
    check_theta(problem, env, theta_t)?;
    let batch = draw(env, cfg)?;
    let sols = solve_batch(problem, &batch, theta_t, &cfg.inner, ledger, robust, warm)?;
    let (mut d, _) = diagnostics(problem, &batch, &sols);
    let n = batch.len() as f64;
    let zs: Vec<&[f64]> = sols.iter().map(|s| s.z.as_slice()).collect();
    let mut g = summed_loss_grad(problem, &batch, &zs, theta_t, 1.0 / n);
    problem.penalty.add_grad(theta_t, -d.mean_cost, &mut g);
    let mut next = theta_t.to_vec();
    axpy(-cfg.eta, &g, &mut next);
    d.clamped_coords = env.clamped_coords();
    Ok(Step {
        theta_next: problem.theta_space.project(&next)?,
        diagnostics: d,
        batch,
        solutions: sols,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// `param_gap` fell below the early-stop threshold.
    NumericallyZero,
    Error,
}

/// One outer iteration `t`: the step from `theta_t` to `theta_{t+1}` on
/// `P(theta_t)`. The `*_pre` metrics evaluate `theta_t` and the others
/// `theta_{t+1}`, both on `P(theta_t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t: usize,
    pub theta: Vec<f64>,
    pub param_gap: f64,
    /// Batch mean of `f(theta_{t+1}, xi)`.
    pub robust_risk: f64,
    pub plain_loss: f64,
    pub accuracy: f64,
    pub detection_rate: f64,
    pub plain_loss_pre: f64,
    pub accuracy_pre: f64,
    pub detection_rate_pre: f64,
    pub diagnostics: StepDiagnostics,
    pub wall_time_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub theta0: Vec<f64>,
    pub records: Vec<RunRecord>,
    pub stop_reason: StopReason,
    pub error: Option<DrppError>,
    /// Step-size bound for the gradient variants; NaN when not certified.
    pub eta_bound: Option<f64>,
    /// Gradient run with a step size outside the certified range.
    pub eta_flagged: bool,
}

impl RunTrace {
    pub fn final_theta(&self) -> &[f64] {
        self.records.last().map_or(&self.theta0, |r| &r.theta)
    }

    pub fn early_stop_iteration(&self) -> Option<usize> {
        (self.stop_reason == StopReason::NumericallyZero).then(|| self.records.last().map_or(0, |r| r.t))
    }
}

/// Runs `algorithm` for `cfg.outer_iters` rounds starting from `theta0`.
///
/// Each round deploys `theta_t` on top of `env0`, then steps. The static
/// baseline trains once on `env0` itself and keeps that model; it is still
/// evaluated on the distribution its deployment induces. The trace is
/// returned even when a step fails.
pub fn run(
    algorithm: Algorithm,
    problem: &RobustProblem,
    env0: &EnvState,
    theta0: &[f64],
    cfg: &RunConfig,
    ledger: &RegularityLedger,
) -> RunTrace {
    let mut trace = RunTrace {
        algorithm,
        theta0: theta0.to_vec(),
        records: Vec::new(),
        stop_reason: StopReason::Completed,
        error: None,
        eta_bound: None,
        eta_flagged: false,
    };
    if algorithm.is_gradient() {
        let bound = LipschitzConstants::from_ledger(ledger)
            .map(|lip| contraction_gd(&lip, ledger.epsilon_sens, cfg.inner.inner_tol, cfg.eta).eta_bound)
            .unwrap_or(f64::NAN);
        trace.eta_bound = Some(bound);
        trace.eta_flagged = !(cfg.eta > 0.0 && cfg.eta < bound);
    }
    if let Err(e) = run_into(algorithm, problem, env0, theta0, cfg, ledger, &mut trace) {
        trace.stop_reason = StopReason::Error;
        trace.error = Some(e);
    }
    trace
}

fn run_into(
    algorithm: Algorithm,
    problem: &RobustProblem,
    env0: &EnvState,
    theta0: &[f64],
    cfg: &RunConfig,
    ledger: &RegularityLedger,
    trace: &mut RunTrace,
) -> Result<()> {
    cfg.validate()?;
    check_theta(problem, env0, theta0)?;
    let mut theta = problem.theta_space.project(theta0)?;
    let warm_ok = cfg.batch == BatchSize::Full && cfg.inner.start_rule == crate::inner::StartRule::WarmStart;
    let mut warm: Option<Vec<InnerSolution>> = None;
    let robust = algorithm.is_robust();
    for t in 0..cfg.outer_iters {
        let clock = cfg.record_wall_time.then(Instant::now);
        let env = env0.deploy(&theta, &cfg.shift)?;
        let w = if warm_ok { warm.as_deref() } else { None };
        let step = match algorithm {
            Algorithm::Rrm | Algorithm::PpRrm => rrm_step(problem, &env, &theta, cfg, ledger, robust, w)?,
            Algorithm::Rgd | Algorithm::PpRgd => rgd_step(problem, &env, &theta, cfg, ledger, robust, w)?,
            Algorithm::Static if t == 0 => rrm_step(problem, env0, &theta, cfg, ledger, false, None)?,
            Algorithm::Static => Step {
                theta_next: theta.clone(),
                diagnostics: StepDiagnostics {
                    clamped_coords: env.clamped_coords(),
                    ..StepDiagnostics::default()
                },
                batch: draw(&env, cfg)?,
                solutions: Vec::new(),
            },
        };
        let next = step.theta_next;
        // robust risk of the new model on the batch it was trained on
        let warm_next = (!step.solutions.is_empty() && robust).then_some(step.solutions.as_slice());
        let risk_sols = solve_batch(problem, &step.batch, &next, &cfg.inner, ledger, true, warm_next)?;
        let robust_risk = risk_sols.iter().map(|s| s.phi_value).sum::<f64>() / risk_sols.len() as f64;
        let pre = evaluate(&problem.loss, &theta, env.samples())?;
        let post = evaluate(&problem.loss, &next, env.samples())?;
        let param_gap = dist(&next, &theta);
        trace.records.push(RunRecord {
            t,
            theta: next.clone(),
            param_gap,
            robust_risk,
            plain_loss: post.plain_loss,
            accuracy: post.accuracy,
            detection_rate: post.detection_rate,
            plain_loss_pre: pre.plain_loss,
            accuracy_pre: pre.accuracy,
            detection_rate_pre: pre.detection_rate,
            diagnostics: step.diagnostics,
            wall_time_s: clock.map(|c| c.elapsed().as_secs_f64()),
        });
        if robust {
            warm = Some(step.solutions);
        }
        theta = next;
        if algorithm != Algorithm::Static && param_gap <= cfg.early_stop_tol {
            trace.stop_reason = StopReason::NumericallyZero;
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{BaseDataset, ShiftReference};
    use crate::loss::{LossKind, LossModel};
    use crate::penalty::PenaltyFunction;
    use crate::space::{ParamSpace, SampleSpace};
    use std::sync::Arc;

    fn quad_problem(dim: usize, lambda: f64, ridge: f64, theta_space: ParamSpace) -> RobustProblem {
        let space = SampleSpace::symmetric(dim, 50.0, false).unwrap();
        let loss = LossModel::analytic(LossKind::squared_distance(ridge), &ParamSpace::origin_ball(dim, 10.0).unwrap(), &space).unwrap();
        RobustProblem::new(loss, PenaltyFunction::constant(lambda).unwrap(), theta_space, space).unwrap()
    }

    fn env(xs: &[Vec<f64>], b: f64) -> EnvState {
        let dim = xs[0].len();
        let base = BaseDataset::new(
            xs.iter().map(|x| Sample::unlabeled(x.clone())).collect(),
            (0..dim).map(|j| format!("x{j}")).collect(),
            vec![true; dim],
            None,
        )
        .unwrap();
        EnvState::new(Arc::new(base), SampleSpace::symmetric(dim, b, false).unwrap(), 0, ShiftReference::Base).unwrap()
    }

    fn cfg(eps: f64) -> RunConfig {
        RunConfig {
            inner: InnerSolveConfig::with_tol(1e-12),
            shift: ShiftMap::linear(eps).unwrap(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn rrm_step_matches_normal_equation() {
        let ridge = 0.5;
        let p = quad_problem(2, 3.0, ridge, ParamSpace::unconstrained());
        let l = p.ledger(0.0).unwrap();
        let e = env(&[vec![1.0, 2.0], vec![-0.5, 0.3], vec![0.2, -1.0]], 50.0);
        let theta = [0.4, -0.2];
        let s = rrm_step(&p, &e, &theta, &cfg(0.0), &l, true, None).unwrap();
        let n = s.solutions.len() as f64;
        let zbar: Vec<f64> = (0..2).map(|j| s.solutions.iter().map(|z| z.z[j]).sum::<f64>() / n).collect();
        for j in 0..2 {
            assert!((s.theta_next[j] - zbar[j] / (1.0 + ridge)).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_objective_hits_ball_boundary() {
        let space = SampleSpace::symmetric(2, 5.0, false).unwrap();
        let loss = LossModel::analytic(
            LossKind::LinearSynthetic { ridge: 0.0, cross: 1.0 },
            &ParamSpace::origin_ball(2, 1.0).unwrap(),
            &space,
        )
        .unwrap();
        let p = RobustProblem::new(loss, PenaltyFunction::constant(1.0).unwrap(), ParamSpace::origin_ball(2, 1.0).unwrap(), space).unwrap();
        let l = p.ledger(0.0).unwrap();
        let e = env(&[vec![3.0, 4.0]], 5.0);
        let s = rrm_step(&p, &e, &[0.0, 0.0], &cfg(0.0), &l, false, None).unwrap();
        assert!((s.theta_next[0] + 0.6).abs() < 1e-9 && (s.theta_next[1] + 0.8).abs() < 1e-9);
    }

    #[test]
    fn rgd_step_explicit_gradient() {
        let ridge = 0.25;
        let p = quad_problem(1, 2.0, ridge, ParamSpace::unconstrained());
        let l = p.ledger(0.0).unwrap();
        let e = env(&[vec![1.0], vec![3.0]], 50.0);
        let theta = [0.5];
        let mut c = cfg(0.0);
        c.eta = 0.1;
        let s = rgd_step(&p, &e, &theta, &c, &l, true, None).unwrap();
        // z_i = (2 lambda xi - theta)/(2 lambda - 1); grad = (1+ridge) theta - mean z
        let zbar = (4.0 * 2.0 - 0.5) / 3.0;
        let expect = 0.5 - 0.1 * ((1.0 + ridge) * 0.5 - zbar);
        assert!((s.theta_next[0] - expect).abs() < 1e-12);

        c.eta = 0.0;
        assert_eq!(rgd_step(&p, &e, &theta, &c, &l, true, None).unwrap().theta_next, theta.to_vec());
    }

    #[test]
    fn zero_gradient_is_stationary() {
        let p = quad_problem(1, 2.0, 0.0, ParamSpace::unconstrained());
        let l = p.ledger(0.0).unwrap();
        let e = env(&[vec![0.0]], 50.0);
        let s = rgd_step(&p, &e, &[0.0], &cfg(0.0), &l, true, None).unwrap();
        assert_eq!(s.theta_next, vec![0.0]);
    }

    #[test]
    fn no_performativity_reaches_fixed_point() {
        let p = quad_problem(2, 3.0, 0.2, ParamSpace::origin_ball(2, 10.0).unwrap());
        let l = p.ledger(0.0).unwrap();
        let e = env(&[vec![1.0, 2.0], vec![-0.5, 0.3]], 50.0);
        let mut c = cfg(0.0);
        c.early_stop_tol = 0.0;
        c.outer_iters = 30;
        let tr = run(Algorithm::Rrm, &p, &e, &[0.0, 0.0], &c, &l);
        assert!(tr.error.is_none());
        assert!(tr.records.last().unwrap().param_gap <= 1e-9);
        c.outer_iters = 5;

        let st = run(Algorithm::Static, &p, &e, &[0.0, 0.0], &c, &l);
        let pp = run(Algorithm::PpRrm, &p, &e, &[0.0, 0.0], &c, &l);
        assert!(dist(st.final_theta(), pp.final_theta()) < 1e-9);
        assert_eq!(st.records.len(), 5);
    }

    #[test]
    fn early_stop_marks_trace() {
        let p = quad_problem(1, 3.0, 0.2, ParamSpace::origin_ball(1, 10.0).unwrap());
        let l = p.ledger(0.0).unwrap();
        let e = env(&[vec![1.0]], 50.0);
        let tr = run(Algorithm::PpRrm, &p, &e, &[0.0], &cfg(0.0), &l);
        assert_eq!(tr.stop_reason, StopReason::NumericallyZero);
        assert!(tr.records.len() < 20);
        assert!(tr.early_stop_iteration().is_some());
    }

    #[test]
    fn errors_keep_partial_trace() {
        let p = quad_problem(1, 3.0, 0.2, ParamSpace::origin_ball(1, 10.0).unwrap());
        let l = p.ledger(0.0).unwrap();
        let e = env(&[vec![1.0]], 50.0);
        let mut c = cfg(0.0);
        c.outer_iters = 0;
        let tr = run(Algorithm::Rrm, &p, &e, &[0.0], &c, &l);
        assert_eq!(tr.stop_reason, StopReason::Error);
        assert!(tr.records.is_empty());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("dr".parse::<Algorithm>().is_err());
    }
}
