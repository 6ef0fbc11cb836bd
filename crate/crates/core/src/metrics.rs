//! Classification metrics at the 0.5 threshold (`score >= 0.5` predicts 1).

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, DrppError, Result};
use crate::linalg::dot;
use crate::loss::LossModel;
use crate::space::Sample;

/// True-positive rate on label-1 samples.
///
/// `rate` is NaN and `defined` false when the batch has no positives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRate {
    pub rate: f64,
    pub defined: bool,
    pub positives: usize,
    pub detected: usize,
}

#[inline]
fn predicts_one(theta: &[f64], x: &[f64]) -> bool {
    // sigmoid(s) >= 0.5 iff s >= 0
    dot(theta, x) >= 0.0
}

pub fn detection_rate(theta: &[f64], samples: &[Sample]) -> Result<DetectionRate> {
    let mut positives = 0;
    let mut detected = 0;
    for s in samples {
        ensure_dim("sample", theta.len(), s.xi.len())?;
        match s.label {
            None => return Err(DrppError::InvalidArgument("detection rate needs labeled samples".into())),
            Some(1) => {
                positives += 1;
                if predicts_one(theta, &s.xi) {
                    detected += 1;
                }
            }
            Some(_) => {}
        }
    }
    let defined = positives > 0;
    Ok(DetectionRate {
        rate: if defined { detected as f64 / positives as f64 } else { f64::NAN },
        defined,
        positives,
        detected,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub plain_loss: f64,
    /// NaN for unlabeled data.
    pub accuracy: f64,
    /// NaN when undefined, see [`DetectionRate`].
    pub detection_rate: f64,
}

/// Nominal loss, accuracy and detection rate of `theta` on `samples`.
pub fn evaluate(loss: &LossModel, theta: &[f64], samples: &[Sample]) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(DrppError::State("no samples to evaluate".into()));
    }
    let labeled = samples.iter().all(|s| s.label.is_some());
    let mut total = 0.0;
    let mut correct = 0usize;
    for s in samples {
        ensure_dim("sample", theta.len(), s.xi.len())?;
        if loss.is_logistic() && s.label.is_none() {
            return Err(DrppError::InvalidArgument("logistic loss needs labeled samples".into()));
        }
        total += loss.value_unchecked(theta, &s.xi, s.y().unwrap_or(0.0));
        if let Some(y) = s.label {
            if predicts_one(theta, &s.xi) == (y == 1) {
                correct += 1;
            }
        }
    }
    let n = samples.len() as f64;
    let (accuracy, detection) = if labeled {
        (correct as f64 / n, detection_rate(theta, samples)?.rate)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(Metrics {
        plain_loss: total / n,
        accuracy,
        detection_rate: detection,
    })
}
