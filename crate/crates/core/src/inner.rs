//! Robust surrogate `phi(theta, xi, zeta) = l(theta, zeta) - lambda(theta) c(xi, zeta)`
//! and its inner maximization over `zeta in Xi`.
//!
//! The maximizer is computed by projected gradient ascent. Strong concavity
//! in zeta gives a computable certificate on the distance to the exact
//! maximizer: for a step `s <= 1/L` and gradient mapping `G`,
//!
//! ```text
//! ||z+ - zeta*|| <= 2 sqrt(1 - mu s) ||G(z)|| / mu
//! ```
//!
//! so the solver stops as soon as this bound drops below `inner_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, DrppError, Result};
use crate::ledger::RegularityLedger;
use crate::linalg::{axpy, dist};
use crate::loss::{LossKind, LossModel};
use crate::penalty::PenaltyFunction;
use crate::space::{ParamSpace, Sample, SampleSpace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    Fixed { step: f64 },
    Lipschitz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    AtXi,
    /// Start from the previous maximizer when the caller supplies one.
    WarmStart,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerSolveConfig {
    pub inner_tol: f64,
    pub max_ascent_iters: usize,
    pub step_rule: StepRule,
    pub start_rule: StartRule,
    /// Use the exact maximizer when the loss admits one.
    #[serde(default = "yes")]
    pub closed_form: bool,
}

fn yes() -> bool {
    true
}

impl Default for InnerSolveConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-9,
            max_ascent_iters: 10_000,
            step_rule: StepRule::Lipschitz,
            start_rule: StartRule::AtXi,
            closed_form: true,
        }
    }
}

impl InnerSolveConfig {
    pub fn with_tol(inner_tol: f64) -> Self {
        Self {
            inner_tol,
            ..Self::default()
        }
    }

    /// `inner_tol = 0` asks for an exact solve; only closed-form losses meet
    /// it before the iteration cap.
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol >= 0.0 && self.inner_tol.is_finite()) {
            return Err(DrppError::InvalidArgument(format!("inner_tol = {}", self.inner_tol)));
        }
        if self.max_ascent_iters == 0 {
            return Err(DrppError::InvalidArgument("max_ascent_iters must be >= 1".into()));
        }
        if let StepRule::Fixed { step } = self.step_rule {
            if !(step > 0.0 && step.is_finite()) {
                return Err(DrppError::InvalidArgument(format!("fixed ascent step {step}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerSolution {
    pub z: Vec<f64>,
    pub phi_value: f64,
    /// Upper bound on `||z - zeta*||`.
    pub certified_gap: f64,
    pub ascent_iters_used: usize,
}

/// Loss, multiplier and both constraint sets of one robust learning problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustProblem {
    pub loss: LossModel,
    pub penalty: PenaltyFunction,
    pub theta_space: ParamSpace,
    pub sample_space: SampleSpace,
}

impl RobustProblem {
    pub fn new(
        loss: LossModel,
        penalty: PenaltyFunction,
        theta_space: ParamSpace,
        sample_space: SampleSpace,
    ) -> Result<Self> {
        if let Some(d) = theta_space.dim() {
            ensure_dim("theta space vs sample space", sample_space.dim(), d)?;
        }
        if let LossKind::QuadraticSynthetic { zeta_lin, .. } = &loss.kind {
            if !zeta_lin.is_empty() {
                ensure_dim("quadratic zeta_lin", sample_space.dim(), zeta_lin.len())?;
            }
        }
        Ok(Self {
            loss,
            penalty,
            theta_space,
            sample_space,
        })
    }

    pub fn dim(&self) -> usize {
        self.sample_space.dim()
    }

    pub fn ledger(&self, epsilon_sens: f64) -> Result<RegularityLedger> {
        RegularityLedger::new(epsilon_sens, &self.loss, &self.penalty, &self.sample_space)
    }

    fn check_point(&self, theta: &[f64], xi: &Sample) -> Result<()> {
        ensure_dim("theta", self.dim(), theta.len())?;
        ensure_dim("sample", self.dim(), xi.xi.len())?;
        ensure_finite("theta", theta)?;
        ensure_finite("sample", &xi.xi)?;
        if self.loss.is_logistic() && xi.label.is_none() {
            return Err(DrppError::InvalidArgument("logistic loss needs labeled samples".into()));
        }
        Ok(())
    }

    #[inline]
    fn y(xi: &Sample) -> f64 {
        xi.y().unwrap_or(0.0)
    }

    /// `phi(theta, xi, zeta) = l(theta, zeta) - lambda(theta) c(xi, zeta)`.
    pub fn phi(&self, theta: &[f64], xi: &Sample, zeta: &[f64]) -> Result<f64> {
        self.check_point(theta, xi)?;
        ensure_dim("zeta", self.dim(), zeta.len())?;
        ensure_finite("zeta", zeta)?;
        Ok(self.phi_unchecked(theta, xi, zeta, self.penalty.value(theta)))
    }

    #[inline]
    pub(crate) fn phi_unchecked(&self, theta: &[f64], xi: &Sample, zeta: &[f64], lambda: f64) -> f64 {
        self.loss.value_unchecked(theta, zeta, Self::y(xi))
            - lambda * self.sample_space.cost_unchecked(&xi.xi, zeta)
    }

    /// `grad_zeta phi` restricted to perturbable coordinates.
    fn grad_zeta_phi(&self, theta: &[f64], xi: &Sample, zeta: &[f64], lambda: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.loss.add_grad_zeta(theta, zeta, Self::y(xi), 1.0, out);
        let mask = self.sample_space.strategic_mask();
        for j in 0..out.len() {
            out[j] = if mask[j] {
                out[j] - 2.0 * lambda * (zeta[j] - xi.xi[j])
            } else {
                0.0
            };
        }
    }

    /// Approximate `argmax_{zeta in Xi} phi(theta, xi, zeta)`.
    ///
    /// `warm` is used as the starting point when the config asks for warm
    /// starts; correctness does not depend on it.
    pub fn solve_inner(
        &self,
        theta: &[f64],
        xi: &Sample,
        cfg: &InnerSolveConfig,
        ledger: &RegularityLedger,
        warm: Option<&[f64]>,
    ) -> Result<InnerSolution> {
        self.solve_inner_traced(theta, xi, cfg, ledger, warm, None)
    }

    pub(crate) fn solve_inner_traced(
        &self,
        theta: &[f64],
        xi: &Sample,
        cfg: &InnerSolveConfig,
        ledger: &RegularityLedger,
        warm: Option<&[f64]>,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<InnerSolution> {
        cfg.validate()?;
        self.check_point(theta, xi)?;
        ledger.require_mu()?;
        let lambda = self.penalty.value(theta);

        if cfg.closed_form {
            if let LossKind::LinearSynthetic { cross, .. } = self.loss.kind {
                if lambda <= 0.0 {
                    return Err(DrppError::ConcavityViolation { mu: 2.0 * lambda });
                }
                // grad_zeta l = cross * theta does not depend on zeta.
                let mut z = xi.xi.clone();
                axpy(cross / (2.0 * lambda), theta, &mut z);
                self.sample_space.project_in_place(&mut z, &xi.xi);
                let phi_value = self.phi_unchecked(theta, xi, &z, lambda);
                return Ok(InnerSolution {
                    z,
                    phi_value,
                    certified_gap: 0.0,
                    ascent_iters_used: 0,
                });
            }
        }

        let (h_lo, h_hi) = self.loss.zeta_hessian_bounds(theta);
        let mu = 2.0 * lambda - h_hi;
        if mu <= 0.0 {
            return Err(DrppError::ConcavityViolation { mu });
        }
        let smooth = 2.0 * lambda - h_lo;
        let step = match cfg.step_rule {
            StepRule::Lipschitz => 1.0 / smooth,
            StepRule::Fixed { step } => {
                if step > 1.0 / smooth {
                    return Err(DrppError::InvalidArgument(format!(
                        "fixed ascent step {step} exceeds 1/L = {}",
                        1.0 / smooth
                    )));
                }
                step
            }
        };
        let contraction = (1.0 - mu * step).max(0.0).sqrt();

        let mut z = match (cfg.start_rule, warm) {
            (StartRule::WarmStart, Some(w)) if w.len() == self.dim() => w.to_vec(),
            _ => xi.xi.clone(),
        };
        self.sample_space.project_in_place(&mut z, &xi.xi);
        let dim = z.len();
        let mut g = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        let mut gap = f64::INFINITY;
        if let Some(t) = trace.as_deref_mut() {
            t.push(self.phi_unchecked(theta, xi, &z, lambda));
        }
        for iter in 1..=cfg.max_ascent_iters {
            self.grad_zeta_phi(theta, xi, &z, lambda, &mut g);
            next.copy_from_slice(&z);
            axpy(step, &g, &mut next);
            self.sample_space.project_in_place(&mut next, &xi.xi);
            let grad_map = dist(&next, &z) / step;
            gap = 2.0 * contraction * grad_map / mu;
            std::mem::swap(&mut z, &mut next);
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.phi_unchecked(theta, xi, &z, lambda));
            }
            if gap <= cfg.inner_tol {
                let phi_value = self.phi_unchecked(theta, xi, &z, lambda);
                return Ok(InnerSolution {
                    z,
                    phi_value,
                    certified_gap: gap,
                    ascent_iters_used: iter,
                });
            }
        }
        Err(DrppError::NotConverged {
            solver: "inner ascent",
            iters: cfg.max_ascent_iters,
            gap,
            best: z,
        })
    }

    /// `f(theta, xi) = max_zeta phi(theta, xi, zeta)`, evaluated at the
    /// certified approximate maximizer.
    pub fn surrogate_f(
        &self,
        theta: &[f64],
        xi: &Sample,
        cfg: &InnerSolveConfig,
        ledger: &RegularityLedger,
    ) -> Result<f64> {
        Ok(self.solve_inner(theta, xi, cfg, ledger, None)?.phi_value)
    }

    /// Envelope gradient `grad_theta l(theta, z) - grad lambda(theta) c(xi, z)`.
    pub fn danskin_grad(&self, theta: &[f64], xi: &Sample, solution: &InnerSolution) -> Result<Vec<f64>> {
        self.check_point(theta, xi)?;
        ensure_dim("inner solution", self.dim(), solution.z.len())?;
        let mut g = vec![0.0; theta.len()];
        self.add_danskin_grad(theta, xi, &solution.z, 1.0, &mut g);
        Ok(g)
    }

    pub(crate) fn add_danskin_grad(&self, theta: &[f64], xi: &Sample, z: &[f64], w: f64, out: &mut [f64]) {
        self.loss.add_grad_theta(theta, z, Self::y(xi), w, out);
        let c = self.sample_space.cost_unchecked(&xi.xi, z);
        if c != 0.0 {
            self.penalty.add_grad(theta, -w * c, out);
        }
    }
}
