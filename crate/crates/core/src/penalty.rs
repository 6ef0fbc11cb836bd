//! Decision-dependent Lagrange multiplier `lambda(theta)`.
//!
//! A larger multiplier means a tighter Wasserstein ball around the empirical
//! distribution; the radius itself never appears explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{DrppError, Result};
use crate::linalg::{axpy, norm_sq};
use crate::space::ParamSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyKind {
    Constant { lambda_c: f64 },
    /// `lambda_c + coef * ||theta||^2`
    Quadratic { lambda_c: f64, coef: f64 },
}

/// `lambda_min <= lambda(theta) <= lambda_max`, `||grad lambda|| <= l_lambda`,
/// `grad lambda` is `h_lambda`-Lipschitz, all over `Theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub l_lambda: f64,
    pub h_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyFunction {
    pub kind: PenaltyKind,
    pub bounds: PenaltyBounds,
}

impl PenaltyFunction {
    pub fn constant(lambda_c: f64) -> Result<Self> {
        Self::new(PenaltyKind::Constant { lambda_c }, &ParamSpace::unconstrained())
    }

    /// Builds the penalty with bounds computed analytically over `theta_space`.
    pub fn new(kind: PenaltyKind, theta_space: &ParamSpace) -> Result<Self> {
        let bounds = match kind {
            PenaltyKind::Constant { lambda_c } => {
                if !(lambda_c.is_finite() && lambda_c >= 0.0) {
                    return Err(DrppError::InvalidArgument(format!("lambda_c = {lambda_c}")));
                }
                PenaltyBounds {
                    lambda_min: lambda_c,
                    lambda_max: lambda_c,
                    l_lambda: 0.0,
                    h_lambda: 0.0,
                }
            }
            PenaltyKind::Quadratic { lambda_c, coef } => {
                if !(lambda_c.is_finite() && lambda_c >= 0.0 && coef.is_finite() && coef >= 0.0) {
                    return Err(DrppError::InvalidArgument(format!(
                        "quadratic penalty lambda_c = {lambda_c}, coef = {coef}"
                    )));
                }
                let rmax = theta_space.max_norm();
                let rmin = theta_space.min_norm();
                if coef > 0.0 && !rmax.is_finite() {
                    return Err(DrppError::InvalidArgument(
                        "quadratic penalty needs a bounded parameter space".into(),
                    ));
                }
                PenaltyBounds {
                    lambda_min: lambda_c + coef * rmin * rmin,
                    lambda_max: lambda_c + coef * rmax * rmax,
                    l_lambda: if coef == 0.0 { 0.0 } else { 2.0 * coef * rmax },
                    h_lambda: 2.0 * coef,
                }
            }
        };
        Ok(Self { kind, bounds })
    }

    /// Same functional form, user-declared bounds.
    pub fn with_bounds(kind: PenaltyKind, bounds: PenaltyBounds) -> Result<Self> {
        let b = bounds;
        let ok = [b.lambda_min, b.lambda_max, b.l_lambda, b.h_lambda]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && b.lambda_min <= b.lambda_max;
        if !ok {
            return Err(DrppError::InvalidArgument(format!("penalty bounds {b:?}")));
        }
        Ok(Self { kind, bounds })
    }

    pub fn lambda_c(&self) -> f64 {
        match self.kind {
            PenaltyKind::Constant { lambda_c } | PenaltyKind::Quadratic { lambda_c, .. } => lambda_c,
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        match self.kind {
            PenaltyKind::Constant { lambda_c } => lambda_c,
            PenaltyKind::Quadratic { lambda_c, coef } => lambda_c + coef * norm_sq(theta),
        }
    }

    pub fn grad(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; theta.len()];
        self.add_grad(theta, 1.0, &mut g);
        g
    }

    /// `out += w * grad lambda(theta)`
    pub(crate) fn add_grad(&self, theta: &[f64], w: f64, out: &mut [f64]) {
        if let PenaltyKind::Quadratic { coef, .. } = self.kind {
            axpy(2.0 * coef * w, theta, out);
        }
    }

    pub fn is_constant(&self) -> bool {
        match self.kind {
            PenaltyKind::Constant { .. } => true,
            PenaltyKind::Quadratic { coef, .. } => coef == 0.0,
        }
    }
}
