use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bounds::{contraction_gd, contraction_rm, suboptimality_bounds, GdContraction, RmContraction};
use crate::error::{DrppError, Result};
use crate::ledger::RegularityLedger;

/// Lipschitz constants of the surrogate `phi`, of the maximizer
/// `zeta*(theta, xi)` and of the envelope `f`, all derived from a ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConstants {
    pub mu: f64,
    pub gamma: f64,
    pub gamma_literal: f64,
    pub phi_theta_theta: f64,
    pub phi_theta_xi: f64,
    pub phi_theta_zeta: f64,
    pub phi_zeta_theta: f64,
    pub phi_zeta_xi: f64,
    /// Lipschitz constant of `zeta*` in theta.
    pub zeta_star_theta: f64,
    /// Lipschitz constant of `zeta*` in xi.
    pub zeta_star_xi: f64,
    pub f_theta_theta: f64,
    pub f_theta_xi: f64,
    pub f_xi: f64,
}

impl LipschitzConstants {
    pub fn from_ledger(ledger: &RegularityLedger) -> Result<Self> {
        let mu = ledger.require_mu()?;
        let c = &ledger.loss;
        let p = &ledger.penalty;
        let d = ledger.diameter;

        let phi_theta_theta = c.l_theta_theta + p.h_lambda * d * d;
        let phi_theta_xi = 2.0 * p.l_lambda * d;
        let phi_theta_zeta = c.l_theta_zeta + 2.0 * p.l_lambda * d;
        let phi_zeta_theta = c.l_zeta_theta + 2.0 * d * p.l_lambda;
        let phi_zeta_xi = 2.0 * p.lambda_max;

        let zeta_star_theta = phi_zeta_theta / mu;
        let zeta_star_xi = phi_zeta_xi / mu;

        Ok(Self {
            mu,
            gamma: ledger.gamma,
            gamma_literal: ledger.gamma_literal,
            phi_theta_theta,
            phi_theta_xi,
            phi_theta_zeta,
            phi_zeta_theta,
            phi_zeta_xi,
            zeta_star_theta,
            zeta_star_xi,
            f_theta_theta: phi_theta_theta + phi_theta_zeta * phi_zeta_theta / mu,
            f_theta_xi: 2.0 * p.lambda_max * phi_theta_zeta / mu + phi_theta_xi,
            f_xi: 2.0 * p.lambda_max * (c.l_zeta + 2.0 * p.lambda_max * d) / mu + 2.0 * p.lambda_max * d,
        })
    }
}

/// Every constant the convergence theory produces for one ledger, step size
/// and inner tolerance.
///
/// Quantities that need `gamma > 0` are `None` when it fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub epsilon_sens: f64,
    pub inner_tol: f64,
    pub eta: f64,
    pub lipschitz: LipschitzConstants,
    pub rm: Option<RmContraction>,
    pub gd: GdContraction,
    pub subopt_param_bound: Option<f64>,
    pub subopt_risk_bound: Option<f64>,
}

impl ConstantsReport {
    pub fn compute(ledger: &RegularityLedger, inner_tol: f64, eta: f64) -> Result<Self> {
        if !(inner_tol >= 0.0 && eta >= 0.0) {
            return Err(DrppError::InvalidArgument(format!("inner_tol = {inner_tol}, eta = {eta}")));
        }
        let lip = LipschitzConstants::from_ledger(ledger)?;
        let eps = ledger.epsilon_sens;
        let rm = contraction_rm(&lip, eps, inner_tol).ok();
        let sub = suboptimality_bounds(&lip, eps).ok();
        Ok(Self {
            epsilon_sens: eps,
            inner_tol,
            eta,
            lipschitz: lip,
            rm,
            gd: contraction_gd(&lip, eps, inner_tol, eta),
            subopt_param_bound: sub.map(|s| s.0),
            subopt_risk_bound: sub.map(|s| s.1),
        })
    }

    /// `(name, value)` pairs in a fixed order; `None` means undefined.
    pub fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        let l = &self.lipschitz;
        let rm = self.rm;
        let gd = &self.gd;
        let defined = |v: f64| if self.lipschitz.gamma > 0.0 { Some(v) } else { None };
        vec![
            ("epsilon_sens", Some(self.epsilon_sens)),
            ("inner_tol", Some(self.inner_tol)),
            ("eta", Some(self.eta)),
            ("mu", Some(l.mu)),
            ("gamma", Some(l.gamma)),
            ("gamma_literal", Some(l.gamma_literal)),
            ("L_phi_theta_theta", Some(l.phi_theta_theta)),
            ("L_phi_theta_xi", Some(l.phi_theta_xi)),
            ("L_phi_theta_zeta", Some(l.phi_theta_zeta)),
            ("L_phi_zeta_theta", Some(l.phi_zeta_theta)),
            ("L_phi_zeta_xi", Some(l.phi_zeta_xi)),
            ("L_zeta_star_theta", Some(l.zeta_star_theta)),
            ("L_zeta_star_xi", Some(l.zeta_star_xi)),
            ("L_f_theta_theta", Some(l.f_theta_theta)),
            ("L_f_theta_xi", Some(l.f_theta_xi)),
            ("L_f_xi", Some(l.f_xi)),
            ("kappa_rm", rm.map(|r| r.kappa)),
            ("C_rm", rm.map(|r| r.c)),
            ("neighborhood_rm", rm.and_then(|r| r.neighborhood)),
            ("beta", Some(gd.beta)),
            ("eta_bound", defined(gd.eta_bound)),
            ("kappa_gd", defined(gd.kappa)),
            ("C_gd", defined(gd.c)),
            ("neighborhood_gd", if self.lipschitz.gamma > 0.0 { gd.neighborhood } else { None }),
            ("subopt_param_bound", self.subopt_param_bound),
            ("subopt_risk_bound", self.subopt_risk_bound),
        ]
    }

    /// One `name = value` line per entry, 17 significant digits.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (name, v) in self.entries() {
            match v {
                Some(v) => writeln!(out, "{name} = {}", fmt17(v)),
                None => writeln!(out, "{name} = undefined"),
            }
            .expect("writing to a String");
        }
        out
    }

    pub fn rm_contracting(&self) -> bool {
        self.rm.is_some_and(|r| r.kappa < 1.0)
    }

    pub fn gd_contracting(&self) -> bool {
        self.lipschitz.gamma > 0.0 && self.gd.kappa < 1.0
    }
}

pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossConstants;
    use crate::penalty::PenaltyBounds;

    fn ledger(lambda: f64, l_lambda: f64, h_lambda: f64) -> RegularityLedger {
        RegularityLedger::from_parts(
            0.5,
            LossConstants {
                l_theta_theta: 2.0,
                l_theta_zeta: 1.0,
                l_zeta_theta: 1.0,
                l_zeta: 1.0,
                gamma_loss: 2.0,
                l_zeta_zeta: 0.0,
            },
            PenaltyBounds {
                lambda_min: lambda,
                lambda_max: lambda,
                l_lambda,
                h_lambda,
            },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn constant_penalty_limit() {
        let l = LipschitzConstants::from_ledger(&ledger(3.0, 0.0, 0.0)).unwrap();
        assert_eq!(l.phi_theta_xi, 0.0);
        assert_eq!(l.phi_theta_zeta, 1.0);
        assert_eq!(l.phi_theta_theta, 2.0);
        assert_eq!(l.f_theta_xi, 2.0 * 3.0 * 1.0 / 6.0);
    }

    #[test]
    fn f_xi_example() {
        // lambda_c = 5, mu = 10, L_zeta = 1, D = 1: 1 + 4 lambda_c
        let l = LipschitzConstants::from_ledger(&ledger(5.0, 0.0, 0.0)).unwrap();
        assert_eq!(l.f_xi, 21.0);
    }

    #[test]
    fn needs_mu() {
        assert!(LipschitzConstants::from_ledger(&ledger(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn undefined_when_gamma_fails() {
        let r = ConstantsReport::compute(&ledger(3.0, 1.0, 10.0), 1e-9, 0.01).unwrap();
        assert!(r.lipschitz.gamma < 0.0);
        let kv = r.to_key_value();
        assert!(kv.contains("kappa_rm = undefined"));
        assert!(kv.contains("eta_bound = undefined"));
        assert!(kv.contains("mu = 6.0000000000000000e0"));
        assert_eq!(kv.lines().count(), r.entries().len());
    }
}
