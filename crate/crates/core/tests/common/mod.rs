#![allow(dead_code)]

use std::sync::Arc;

use drpp_core::{
    ArgminConfig, BaseDataset, BatchSize, EnvState, InnerSolveConfig, LossKind, LossModel, ParamSpace,
    PenaltyFunction, PenaltyKind, RobustProblem, RunConfig, Sample, SampleSpace, ShiftMap, ShiftReference,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-r..r)).collect()
}

pub fn problem(kind: LossKind, penalty: PenaltyKind, space: SampleSpace, radius: f64) -> RobustProblem {
    let d = space.dim();
    let theta_space = ParamSpace::origin_ball(d, radius).unwrap();
    let loss = LossModel::analytic(kind, &theta_space, &space).unwrap();
    let penalty = PenaltyFunction::new(penalty, &theta_space).unwrap();
    RobustProblem::new(loss, penalty, theta_space, space).unwrap()
}

/// `1/2 ||theta - zeta||^2 + (ridge/2) ||theta||^2` with constant multiplier.
pub fn quadratic(dim: usize, lambda: f64, ridge: f64, b: f64) -> RobustProblem {
    problem(
        LossKind::squared_distance(ridge),
        PenaltyKind::Constant { lambda_c: lambda },
        SampleSpace::symmetric(dim, b, false).unwrap(),
        2.0 * b,
    )
}

pub fn linear(dim: usize, lambda: f64, ridge: f64, cross: f64, b: f64) -> RobustProblem {
    problem(
        LossKind::LinearSynthetic { ridge, cross },
        PenaltyKind::Constant { lambda_c: lambda },
        SampleSpace::symmetric(dim, b, false).unwrap(),
        2.0 * b,
    )
}

/// Plain logistic loss on `[-b, b]^dim`, every coordinate perturbable.
pub fn logistic(dim: usize, lambda: f64, b: f64, radius: f64) -> RobustProblem {
    problem(
        LossKind::Logistic,
        PenaltyKind::Constant { lambda_c: lambda },
        SampleSpace::symmetric(dim, b, true).unwrap(),
        radius,
    )
}

pub fn env(samples: Vec<Sample>, space: &SampleSpace) -> EnvState {
    let d = space.dim();
    let base = BaseDataset::new(samples, (0..d).map(|j| format!("x{j}")).collect(), space.strategic_mask().to_vec(), None)
        .unwrap();
    EnvState::new(Arc::new(base), space.clone(), 0, ShiftReference::Base).unwrap()
}

pub fn unlabeled(rng: &mut ChaCha8Rng, n: usize, d: usize, r: f64) -> Vec<Sample> {
    (0..n).map(|_| Sample::unlabeled(uniform(rng, d, r))).collect()
}

pub fn mean(samples: &[Sample]) -> Vec<f64> {
    let d = samples[0].xi.len();
    let n = samples.len() as f64;
    (0..d).map(|j| samples.iter().map(|s| s.xi[j]).sum::<f64>() / n).collect()
}

pub fn tight(eps: f64, outer_iters: usize) -> RunConfig {
    RunConfig {
        outer_iters,
        inner: InnerSolveConfig::with_tol(1e-12),
        argmin: ArgminConfig {
            tol: 1e-12,
            max_iters: 1_000_000,
        },
        batch: BatchSize::Full,
        shift: ShiftMap::LinearStrategic { epsilon_sens: eps },
        early_stop_tol: 1e-14,
        ..RunConfig::default()
    }
}
