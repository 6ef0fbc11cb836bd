//! Executable convergence theory and validation oracles.

mod bounds;
mod constants;
mod wasserstein;

pub use bounds::{contraction_gd, contraction_rm, suboptimality_bounds, GdContraction, RmContraction};
pub use constants::{fmt17, ConstantsReport, LipschitzConstants};
pub use wasserstein::{wasserstein1_exact, MAX_W1_SIZE};

use crate::env::{EnvState, ShiftMap};
use crate::inner::{InnerSolveConfig, RobustProblem};
use crate::ledger::RegularityLedger;
use crate::Result;

/// Decoupled performative risk: mean of `f(theta_eval, xi)` over the full
/// dataset deployed under `theta_dist`.
pub fn dpr(
    problem: &RobustProblem,
    theta_dist: &[f64],
    theta_eval: &[f64],
    env_base: &EnvState,
    shift: &ShiftMap,
    inner: &InnerSolveConfig,
    ledger: &RegularityLedger,
) -> Result<f64> {
    let env = env_base.deploy(theta_dist, shift)?;
    let sols = crate::algorithms::solve_batch(problem, env.samples(), theta_eval, inner, ledger, true, None)?;
    Ok(sols.iter().map(|s| s.phi_value).sum::<f64>() / sols.len() as f64)
}
