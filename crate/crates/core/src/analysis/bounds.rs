use serde::{Deserialize, Serialize};

use super::constants::LipschitzConstants;
use crate::error::{DrppError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmContraction {
    pub kappa: f64,
    pub c: f64,
    /// `C / (1 - kappa)`, only when `kappa < 1`.
    pub neighborhood: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdContraction {
    pub kappa: f64,
    pub c: f64,
    pub beta: f64,
    pub eta_bound: f64,
    pub neighborhood: Option<f64>,
}

fn require_gamma(lip: &LipschitzConstants) -> Result<f64> {
    if lip.gamma > 0.0 {
        Ok(lip.gamma)
    } else {
        Err(DrppError::ConvexityViolation { gamma: lip.gamma })
    }
}

fn neighborhood(kappa: f64, c: f64) -> Option<f64> {
    (kappa < 1.0).then(|| if c == 0.0 { 0.0 } else { c / (1.0 - kappa) })
}

/// Repeated risk minimization: `kappa = eps L^f_theta_xi / gamma`,
/// `C = 2 L^phi_theta_zeta tol / gamma`.
pub fn contraction_rm(lip: &LipschitzConstants, epsilon_sens: f64, inner_tol: f64) -> Result<RmContraction> {
    let gamma = require_gamma(lip)?;
    let kappa = epsilon_sens * lip.f_theta_xi / gamma;
    let c = 2.0 * lip.phi_theta_zeta * inner_tol / gamma;
    Ok(RmContraction {
        kappa,
        c,
        neighborhood: neighborhood(kappa, c),
    })
}

/// Repeated gradient descent with step `eta`.
///
/// `kappa = sqrt(eta^2 beta^2 + 2 eta (eps L^f_theta_xi - gamma) + 1)` with
/// `beta = L^f_theta_theta + eps L^f_theta_xi`; contracting iff
/// `0 < eta < 2 (gamma - eps L^f_theta_xi) / beta^2`. Never fails; callers
/// check `gamma` themselves.
pub fn contraction_gd(lip: &LipschitzConstants, epsilon_sens: f64, inner_tol: f64, eta: f64) -> GdContraction {
    let drift = epsilon_sens * lip.f_theta_xi;
    let beta = lip.f_theta_theta + drift;
    let radicand = eta * eta * beta * beta + 2.0 * eta * (drift - lip.gamma) + 1.0;
    let kappa = radicand.max(0.0).sqrt();
    let a = lip.phi_theta_zeta;
    let c = if inner_tol == 0.0 || eta == 0.0 {
        0.0
    } else if kappa == 0.0 {
        f64::INFINITY
    } else {
        2.0 * eta * inner_tol * (a * (eta * beta + 1.0) / kappa + a)
    };
    GdContraction {
        kappa,
        c,
        beta,
        eta_bound: 2.0 * (lip.gamma - drift) / (beta * beta),
        neighborhood: neighborhood(kappa, c),
    }
}

/// Distance and risk gap between the stable point and the performative
/// optimum: `(2 eps L^f_xi / gamma, 2 (eps L^f_xi)^2 / gamma)`.
pub fn suboptimality_bounds(lip: &LipschitzConstants, epsilon_sens: f64) -> Result<(f64, f64)> {
    let gamma = require_gamma(lip)?;
    let s = epsilon_sens * lip.f_xi;
    Ok((2.0 * s / gamma, 2.0 * s * s / gamma))
}
