//! Loss functions `l(theta, zeta)` and their declared regularity constants.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, DrppError, Result};
use crate::linalg::{axpy, dot, norm, norm_sq};
use crate::space::{ParamSpace, SampleSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LossKind {
    /// `-y theta.x + log(1 + exp(theta.x))`
    Logistic,
    /// Logistic plus `(ridge / 2) ||theta||^2`.
    RidgeLogistic { ridge: f64 },
    /// `(a/2)||theta||^2 + b theta.zeta + (c/2)||zeta||^2 + q.zeta + r`.
    ///
    /// `zeta_lin` may be empty, meaning `q = 0`.
    QuadraticSynthetic {
        theta_curv: f64,
        cross: f64,
        zeta_curv: f64,
        #[serde(default)]
        zeta_lin: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `(ridge/2)||theta||^2 + cross theta.zeta`; the inner problem has a
    /// closed-form maximizer.
    LinearSynthetic { ridge: f64, cross: f64 },
}

/// Regularity constants of a loss on `Theta x Xi`.
///
/// `gamma_loss` is the strong-convexity modulus in `theta`, `l_zeta_zeta`
/// bounds the largest eigenvalue of the zeta-Hessian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConstants {
    pub l_theta_theta: f64,
    pub l_theta_zeta: f64,
    pub l_zeta_theta: f64,
    pub l_zeta: f64,
    pub gamma_loss: f64,
    pub l_zeta_zeta: f64,
}

impl LossConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("L_theta_theta", self.l_theta_theta),
            ("L_theta_zeta", self.l_theta_zeta),
            ("L_zeta_theta", self.l_zeta_theta),
            ("L_zeta", self.l_zeta),
            ("gamma_loss", self.gamma_loss),
            ("L_zeta_zeta", self.l_zeta_zeta),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DrppError::InvalidArgument(format!(
                    "loss constant {name} = {v} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub kind: LossKind,
    pub constants: LossConstants,
}

#[inline]
fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(s))` without overflow.
#[inline]
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

// 0 * inf is treated as 0 when composing bounds.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl LossModel {
    /// Loss with user-declared constants.
    pub fn with_constants(kind: LossKind, constants: LossConstants) -> Result<Self> {
        constants.validate()?;
        Self::validate_kind(&kind)?;
        Ok(Self { kind, constants })
    }

    /// Loss with conservative analytic constants derived from the bounds of
    /// `Theta` and `Xi`.
    ///
    /// For the logistic family with `R_x = sup ||x||`, `R_t = sup ||theta||`:
    /// `L_tt = R_x^2/4 + ridge`, `L_tz = L_zt = 1 + R_t R_x / 4`,
    /// `L_z = R_t`, `L_zz = R_t^2 / 4`.
    pub fn analytic(kind: LossKind, theta_space: &ParamSpace, sample_space: &SampleSpace) -> Result<Self> {
        Self::validate_kind(&kind)?;
        let rx = sample_space.max_norm();
        let rt = theta_space.max_norm();
        let constants = match &kind {
            LossKind::Logistic | LossKind::RidgeLogistic { .. } => {
                if !rt.is_finite() {
                    return Err(DrppError::InvalidArgument(
                        "logistic constants need a bounded parameter space".into(),
                    ));
                }
                let ridge = kind.ridge();
                let cross = 1.0 + rt * rx / 4.0;
                LossConstants {
                    l_theta_theta: rx * rx / 4.0 + ridge,
                    l_theta_zeta: cross,
                    l_zeta_theta: cross,
                    l_zeta: rt,
                    gamma_loss: ridge,
                    l_zeta_zeta: rt * rt / 4.0,
                }
            }
            LossKind::QuadraticSynthetic {
                theta_curv,
                cross,
                zeta_curv,
                zeta_lin,
                ..
            } => LossConstants {
                l_theta_theta: theta_curv.abs(),
                l_theta_zeta: cross.abs(),
                l_zeta_theta: cross.abs(),
                l_zeta: mul0(cross.abs(), rt) + mul0(zeta_curv.abs(), rx) + norm(zeta_lin),
                gamma_loss: theta_curv.max(0.0),
                l_zeta_zeta: zeta_curv.max(0.0),
            },
            LossKind::LinearSynthetic { ridge, cross } => LossConstants {
                l_theta_theta: ridge.abs(),
                l_theta_zeta: cross.abs(),
                l_zeta_theta: cross.abs(),
                l_zeta: mul0(cross.abs(), rt),
                gamma_loss: ridge.max(0.0),
                l_zeta_zeta: 0.0,
            },
        };
        Self::with_constants(kind, constants)
    }

    fn validate_kind(kind: &LossKind) -> Result<()> {
        let ok = match kind {
            LossKind::Logistic => true,
            LossKind::RidgeLogistic { ridge } => ridge.is_finite() && *ridge >= 0.0,
            LossKind::QuadraticSynthetic {
                theta_curv,
                cross,
                zeta_curv,
                zeta_lin,
                offset,
            } => [*theta_curv, *cross, *zeta_curv, *offset]
                .iter()
                .chain(zeta_lin)
                .all(|v| v.is_finite()),
            LossKind::LinearSynthetic { ridge, cross } => ridge.is_finite() && cross.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(DrppError::InvalidArgument(format!("invalid loss parameters {kind:?}")))
        }
    }

    pub fn is_logistic(&self) -> bool {
        matches!(self.kind, LossKind::Logistic | LossKind::RidgeLogistic { .. })
    }

    /// The inner maximizer has an exact closed form for this loss.
    pub fn has_closed_form_inner(&self) -> bool {
        matches!(self.kind, LossKind::LinearSynthetic { .. })
    }

    fn label(&self, label: Option<f64>) -> Result<f64> {
        if self.is_logistic() {
            label.ok_or_else(|| DrppError::InvalidArgument("logistic loss needs a label".into()))
        } else {
            Ok(label.unwrap_or(0.0))
        }
    }

    fn check(&self, theta: &[f64], zeta: &[f64]) -> Result<()> {
        ensure_finite("loss theta", theta)?;
        ensure_finite("loss zeta", zeta)?;
        ensure_dim("loss theta/zeta", theta.len(), zeta.len())?;
        if let LossKind::QuadraticSynthetic { zeta_lin, .. } = &self.kind {
            if !zeta_lin.is_empty() {
                ensure_dim("quadratic zeta_lin", zeta.len(), zeta_lin.len())?;
            }
        }
        Ok(())
    }

    pub fn value(&self, theta: &[f64], zeta: &[f64], label: Option<f64>) -> Result<f64> {
        self.check(theta, zeta)?;
        let y = self.label(label)?;
        Ok(self.value_unchecked(theta, zeta, y))
    }

    pub fn grad_theta(&self, theta: &[f64], zeta: &[f64], label: Option<f64>) -> Result<Vec<f64>> {
        self.check(theta, zeta)?;
        let y = self.label(label)?;
        let mut g = vec![0.0; theta.len()];
        self.add_grad_theta(theta, zeta, y, 1.0, &mut g);
        Ok(g)
    }

    pub fn grad_zeta(&self, theta: &[f64], zeta: &[f64], label: Option<f64>) -> Result<Vec<f64>> {
        self.check(theta, zeta)?;
        let y = self.label(label)?;
        let mut g = vec![0.0; zeta.len()];
        self.add_grad_zeta(theta, zeta, y, 1.0, &mut g);
        Ok(g)
    }

    pub(crate) fn value_unchecked(&self, theta: &[f64], zeta: &[f64], y: f64) -> f64 {
        match &self.kind {
            LossKind::Logistic | LossKind::RidgeLogistic { .. } => {
                let s = dot(theta, zeta);
                softplus(s) - y * s + 0.5 * self.kind.ridge() * norm_sq(theta)
            }
            LossKind::QuadraticSynthetic {
                theta_curv,
                cross,
                zeta_curv,
                zeta_lin,
                offset,
            } => {
                let lin = if zeta_lin.is_empty() { 0.0 } else { dot(zeta_lin, zeta) };
                0.5 * theta_curv * norm_sq(theta)
                    + cross * dot(theta, zeta)
                    + 0.5 * zeta_curv * norm_sq(zeta)
                    + lin
                    + offset
            }
            LossKind::LinearSynthetic { ridge, cross } => {
                0.5 * ridge * norm_sq(theta) + cross * dot(theta, zeta)
            }
        }
    }

    /// `out += w * grad_theta l(theta, zeta)`
    pub(crate) fn add_grad_theta(&self, theta: &[f64], zeta: &[f64], y: f64, w: f64, out: &mut [f64]) {
        match &self.kind {
            LossKind::Logistic | LossKind::RidgeLogistic { .. } => {
                let r = sigmoid(dot(theta, zeta)) - y;
                axpy(w * r, zeta, out);
                let ridge = self.kind.ridge();
                if ridge != 0.0 {
                    axpy(w * ridge, theta, out);
                }
            }
            LossKind::QuadraticSynthetic {
                theta_curv, cross, ..
            } => {
                axpy(w * theta_curv, theta, out);
                axpy(w * cross, zeta, out);
            }
            LossKind::LinearSynthetic { ridge, cross } => {
                axpy(w * ridge, theta, out);
                axpy(w * cross, zeta, out);
            }
        }
    }

    /// `out += w * grad_zeta l(theta, zeta)`
    pub(crate) fn add_grad_zeta(&self, theta: &[f64], zeta: &[f64], y: f64, w: f64, out: &mut [f64]) {
        match &self.kind {
            LossKind::Logistic | LossKind::RidgeLogistic { .. } => {
                let r = sigmoid(dot(theta, zeta)) - y;
                axpy(w * r, theta, out);
            }
            LossKind::QuadraticSynthetic {
                cross,
                zeta_curv,
                zeta_lin,
                ..
            } => {
                axpy(w * cross, theta, out);
                axpy(w * zeta_curv, zeta, out);
                if !zeta_lin.is_empty() {
                    axpy(w, zeta_lin, out);
                }
            }
            LossKind::LinearSynthetic { cross, .. } => axpy(w * cross, theta, out),
        }
    }

    /// Eigenvalue range `(lo, hi)` of the zeta-Hessian of `l(theta, .)`,
    /// valid uniformly in zeta.
    pub fn zeta_hessian_bounds(&self, theta: &[f64]) -> (f64, f64) {
        match &self.kind {
            LossKind::Logistic | LossKind::RidgeLogistic { .. } => (0.0, norm_sq(theta) / 4.0),
            LossKind::QuadraticSynthetic { zeta_curv, .. } => (*zeta_curv, *zeta_curv),
            LossKind::LinearSynthetic { .. } => (0.0, 0.0),
        }
    }

    /// Upper bound on the theta-Hessian of the batch mean of `l(., z_i)`.
    ///
    /// For the logistic family the Hessian is `mean sigma'(.) z z^T` and its
    /// norm is bounded by `mean ||z||^2 / 4`.
    pub fn batch_theta_smoothness<'a, I>(&self, zetas: I) -> f64
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        match &self.kind {
            LossKind::Logistic | LossKind::RidgeLogistic { .. } => {
                let (sum, n) = zetas
                    .into_iter()
                    .fold((0.0, 0usize), |(s, n), z| (s + norm_sq(z), n + 1));
                let mean = if n == 0 { 0.0 } else { sum / n as f64 };
                mean / 4.0 + self.kind.ridge()
            }
            LossKind::QuadraticSynthetic { theta_curv, .. } => theta_curv.abs(),
            LossKind::LinearSynthetic { ridge, .. } => ridge.abs(),
        }
    }

    /// Logistic score `sigmoid(theta.x)`; `None` for the synthetic losses.
    pub fn score(&self, theta: &[f64], x: &[f64]) -> Option<f64> {
        if self.is_logistic() {
            Some(sigmoid(dot(theta, x)))
        } else {
            None
        }
    }
}

impl LossKind {
    pub fn ridge(&self) -> f64 {
        match self {
            LossKind::RidgeLogistic { ridge } => *ridge,
            LossKind::LinearSynthetic { ridge, .. } => *ridge,
            _ => 0.0,
        }
    }

    /// `(1/2)||theta - zeta||^2 + (ridge/2)||theta||^2`
    pub fn squared_distance(ridge: f64) -> Self {
        LossKind::QuadraticSynthetic {
            theta_curv: 1.0 + ridge,
            cross: -1.0,
            zeta_curv: 1.0,
            zeta_lin: Vec::new(),
            offset: 0.0,
        }
    }
}
