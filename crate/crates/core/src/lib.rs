//! Wasserstein distributionally robust performative prediction.
//!
//! The robust objective is handled through its Lagrangian relaxation: for a
//! model `theta` and a sample `xi` the per-sample worst case is
//!
//! ```text
//! f(theta, xi) = max_{zeta in Xi}  l(theta, zeta) - lambda(theta) * ||xi - zeta||^2
//! ```
//!
//! The crate provides the inner maximizer for that surrogate, a
//! decision-dependent data environment, the two retraining loops (repeated
//! risk minimization and repeated gradient descent) together with their
//! non-robust baselines, and the executable constants ledger that predicts
//! their contraction rates.

pub mod algorithms;
pub mod analysis;
pub mod env;
pub mod error;
pub mod inner;
pub mod ledger;
pub mod linalg;
pub mod loss;
pub mod metrics;
pub mod penalty;
pub mod space;

pub use algorithms::{
    rgd_step, rrm_step, run, solve_batch, Algorithm, ArgminConfig, RunConfig, RunRecord, RunTrace, Step,
    StepDiagnostics, StopReason,
};
pub use analysis::{
    contraction_gd, contraction_rm, dpr, fmt17, suboptimality_bounds, wasserstein1_exact, ConstantsReport,
    GdContraction, LipschitzConstants, RmContraction,
};
pub use env::{BaseDataset, BatchSize, EnvState, Normalization, ShiftMap, ShiftReference};
pub use error::{DrppError, Result};
pub use inner::{InnerSolution, InnerSolveConfig, RobustProblem, StartRule, StepRule};
pub use ledger::RegularityLedger;
pub use loss::{LossConstants, LossKind, LossModel};
pub use metrics::{detection_rate, evaluate, DetectionRate, Metrics};
pub use penalty::{PenaltyBounds, PenaltyFunction, PenaltyKind};
pub use space::{transport_cost, ParamSpace, ParamSpaceKind, Sample, SampleSpace};
