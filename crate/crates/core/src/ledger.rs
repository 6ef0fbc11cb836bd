use serde::{Deserialize, Serialize};

use crate::error::{DrppError, Result};
use crate::loss::{LossConstants, LossModel};
use crate::penalty::{PenaltyBounds, PenaltyFunction};
use crate::space::SampleSpace;

/// Every regularity constant the convergence theory consumes.
///
/// * `mu = 2 lambda_min - L_zeta_zeta`: strong concavity of the surrogate in
///   zeta. The curvature term accounts for losses that are convex in zeta
///   (logistic), which would otherwise break the modulus.
/// * `gamma = gamma_loss - H_lambda D^2`: strong convexity of the surrogate
///   in theta built from the loss's own convexity modulus.
/// * `gamma_literal = L_theta_theta - H_lambda D^2`: the same quantity with the
///   smoothness constant in place of the convexity modulus. Reported only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityLedger {
    pub epsilon_sens: f64,
    pub loss: LossConstants,
    pub penalty: PenaltyBounds,
    pub diameter: f64,
    pub mu: f64,
    pub gamma: f64,
    pub gamma_literal: f64,
}

impl RegularityLedger {
    pub fn new(
        epsilon_sens: f64,
        loss: &LossModel,
        penalty: &PenaltyFunction,
        sample_space: &SampleSpace,
    ) -> Result<Self> {
        Self::from_parts(epsilon_sens, loss.constants, penalty.bounds, sample_space.diameter())
    }

    pub fn from_parts(
        epsilon_sens: f64,
        loss: LossConstants,
        penalty: PenaltyBounds,
        diameter: f64,
    ) -> Result<Self> {
        if !(epsilon_sens.is_finite() && epsilon_sens >= 0.0) {
            return Err(DrppError::InvalidArgument(format!("epsilon_sens = {epsilon_sens}")));
        }
        if !(diameter.is_finite() && diameter >= 0.0) {
            return Err(DrppError::InvalidArgument(format!("diameter = {diameter}")));
        }
        loss.validate()?;
        let d2 = diameter * diameter;
        Ok(Self {
            epsilon_sens,
            loss,
            penalty,
            diameter,
            mu: 2.0 * penalty.lambda_min - loss.l_zeta_zeta,
            gamma: loss.gamma_loss - penalty.h_lambda * d2,
            gamma_literal: loss.l_theta_theta - penalty.h_lambda * d2,
        })
    }

    pub fn with_epsilon(mut self, epsilon_sens: f64) -> Self {
        self.epsilon_sens = epsilon_sens;
        self
    }

    pub fn require_mu(&self) -> Result<f64> {
        if self.mu > 0.0 {
            Ok(self.mu)
        } else {
            Err(DrppError::ConcavityViolation { mu: self.mu })
        }
    }

    pub fn require_gamma(&self) -> Result<f64> {
        if self.gamma > 0.0 {
            Ok(self.gamma)
        } else {
            Err(DrppError::ConvexityViolation { gamma: self.gamma })
        }
    }
}
