//! Seeded synthetic instances.
//!
//! * `quadratic`: `l = 1/2 ||theta - zeta||^2 + (ridge/2) ||theta||^2`, features
//!   uniform in `[-1, 1]^d`, every coordinate strategic. Stable point in
//!   closed form.
//! * `linear`: `l = (ridge/2) ||theta||^2 + cross theta.zeta`; the inner
//!   problem and the stable point are both closed form.
//! * `logistic-gaussian`: two labeled Gaussian clusters, standardized,
//!   clamped into `[-B, B]`, plus an intercept column. With `dim = 10` the
//!   columns carry the credit-scoring schema names.

use std::fmt;
use std::str::FromStr;

use drpp_core::{BaseDataset, LossKind, PenaltyKind, Sample, SampleSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ingest::{self, CREDIT_FEATURES, CREDIT_STRATEGIC};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Quadratic,
    Linear,
    LogisticGaussian,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Quadratic => "quadratic",
            SynthKind::Linear => "linear",
            SynthKind::LogisticGaussian => "logistic-gaussian",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "quadratic" => Ok(SynthKind::Quadratic),
            "linear" => Ok(SynthKind::Linear),
            "logistic-gaussian" | "logistic" => Ok(SynthKind::LogisticGaussian),
            _ => anyhow::bail!("unknown synthetic kind {s:?} (quadratic, linear, logistic-gaussian)"),
        }
    }
}

pub const QUADRATIC_RIDGE: f64 = 1.0;
pub const QUADRATIC_LAMBDA: f64 = 50.0;
pub const LINEAR_RIDGE: f64 = 1.0;
pub const LINEAR_CROSS: f64 = 1.0;
pub const LINEAR_LAMBDA: f64 = 5.0;
/// Box half-width for the quadratic and linear instances.
pub const WIDE_BOX: f64 = 10.0;
pub const DEFAULT_POSITIVE_RATE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthInstance {
    pub kind: SynthKind,
    pub dataset: BaseDataset,
    pub sample_space: SampleSpace,
    /// Loss and penalty the instance is designed for.
    pub loss: LossKind,
    pub penalty: PenaltyKind,
    pub theta_radius: f64,
}

impl SynthInstance {
    pub fn feature_mean(&self) -> Vec<f64> {
        let d = self.dataset.dim();
        let n = self.dataset.len() as f64;
        let mut m = vec![0.0; d];
        for s in self.dataset.samples() {
            for (a, b) in m.iter_mut().zip(&s.xi) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Stable point of the quadratic and linear instances under the
    /// base-referenced shift `x - eps theta`, assuming no clamping binds and
    /// a constant multiplier `lambda`.
    pub fn closed_form_stable_point(&self, lambda: f64, eps: f64) -> Option<Vec<f64>> {
        let xbar = self.feature_mean();
        match self.loss {
            LossKind::QuadraticSynthetic { theta_curv, .. } => {
                // z = (2 lambda xi - theta) / (2 lambda - 1), theta = mean z / a
                let denom = (2.0 * lambda - 1.0) * theta_curv + 2.0 * lambda * eps + 1.0;
                Some(xbar.iter().map(|x| 2.0 * lambda * x / denom).collect())
            }
            LossKind::LinearSynthetic { ridge, cross } => {
                // z = xi + cross theta / (2 lambda), theta = -cross mean z / ridge
                let denom = ridge + cross * cross / (2.0 * lambda) - cross * eps;
                Some(xbar.iter().map(|x| -cross * x / denom).collect())
            }
            _ => None,
        }
    }
}

pub fn synth_instance(kind: SynthKind, dim: usize, n: usize, seed: u64) -> anyhow::Result<SynthInstance> {
    synth_instance_with(kind, dim, n, seed, DEFAULT_POSITIVE_RATE, ingest::DEFAULT_BOX)
}

pub fn synth_instance_with(
    kind: SynthKind,
    dim: usize,
    n: usize,
    seed: u64,
    positive_rate: f64,
    box_half_width: f64,
) -> anyhow::Result<SynthInstance> {
    anyhow::ensure!(dim >= 1, "synthetic dim must be >= 1");
    anyhow::ensure!(n >= 2, "synthetic n must be >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SynthKind::Quadratic | SynthKind::Linear => {
            let samples: Vec<Sample> = (0..n)
                .map(|_| Sample::unlabeled((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
                .collect();
            let names = (0..dim).map(|j| format!("x{j}")).collect();
            let dataset = BaseDataset::new(samples, names, vec![true; dim], None)?;
            let sample_space = SampleSpace::symmetric(dim, WIDE_BOX, false)?;
            let (loss, penalty) = if kind == SynthKind::Quadratic {
                (
                    LossKind::squared_distance(QUADRATIC_RIDGE),
                    PenaltyKind::Constant {
                        lambda_c: QUADRATIC_LAMBDA,
                    },
                )
            } else {
                (
                    LossKind::LinearSynthetic {
                        ridge: LINEAR_RIDGE,
                        cross: LINEAR_CROSS,
                    },
                    PenaltyKind::Constant { lambda_c: LINEAR_LAMBDA },
                )
            };
            Ok(SynthInstance {
                kind,
                dataset,
                sample_space,
                loss,
                penalty,
                theta_radius: 2.0 * WIDE_BOX,
            })
        }
        SynthKind::LogisticGaussian => {
            anyhow::ensure!(
                positive_rate > 0.0 && positive_rate < 1.0,
                "positive rate must lie in (0, 1)"
            );
            let (names, strategic): (Vec<String>, Vec<bool>) = if dim == CREDIT_FEATURES.len() {
                CREDIT_FEATURES
                    .iter()
                    .map(|f| (f.to_string(), CREDIT_STRATEGIC.contains(f)))
                    .unzip()
            } else {
                (0..dim).map(|j| (format!("x{j}"), j < 3)).unzip()
            };
            let shift = cluster_offsets(dim);
            let mut rows = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let y = u8::from(rng.random_bool(positive_rate));
                let sign = if y == 1 { 0.5 } else { -0.5 };
                let row: Vec<f64> = shift
                    .iter()
                    .map(|m| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        sign * m + z
                    })
                    .collect();
                rows.push(row);
                labels.push(y);
            }
            ingest::finish_dataset(rows, labels, names, strategic, box_half_width).map(|(dataset, sample_space)| {
                SynthInstance {
                    kind,
                    dataset,
                    sample_space,
                    loss: LossKind::RidgeLogistic { ridge: 1e-3 },
                    penalty: PenaltyKind::Quadratic {
                        lambda_c: 30.0,
                        coef: 0.1,
                    },
                    theta_radius: 10.0,
                }
            })
        }
    }
}

/// Mean difference between the two clusters, per feature. Signs follow the
/// credit schema (utilization and past-due counts up for defaulters, age
/// and income down).
fn cluster_offsets(dim: usize) -> Vec<f64> {
    const PATTERN: [f64; 10] = [1.0, -0.6, 0.8, 0.2, -0.3, -0.4, 0.9, 0.3, 0.7, 0.1];
    (0..dim).map(|j| PATTERN[j % PATTERN.len()]).collect()
}
