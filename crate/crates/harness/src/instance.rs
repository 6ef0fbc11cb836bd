//! Turns a config into concrete problem objects.

use std::sync::Arc;

use anyhow::{bail, Context};
use drpp_core::{
    BaseDataset, EnvState, LossKind, LossModel, ParamSpace, PenaltyFunction, PenaltyKind, RegularityLedger,
    RobustProblem, SampleSpace, ShiftReference,
};

use crate::config::{Adversary, ExperimentConfig, InstanceConfig, LossSpec, PenaltyConfig};
use crate::ingest::{ingest_credit_csv, INTERCEPT};
use crate::synth::{synth_instance_with, SynthInstance};

#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Arc<BaseDataset>,
    /// Box with the adversary's mask applied.
    pub sample_space: SampleSpace,
    pub loss: LossModel,
    pub theta_space: ParamSpace,
    pub synth: Option<SynthInstance>,
    pub dropped_rows: usize,
}

pub fn prepare(cfg: &ExperimentConfig) -> anyhow::Result<Prepared> {
    let (dataset, space, synth, dropped) = match &cfg.instance {
        InstanceConfig::Synthetic {
            kind,
            dim,
            n,
            seed,
            positive_rate,
            box_half_width,
        } => {
            let s = synth_instance_with(*kind, *dim, *n, *seed, *positive_rate, *box_half_width)?;
            (s.dataset.clone(), s.sample_space.clone(), Some(s), 0)
        }
        InstanceConfig::CreditCsv { path, .. } => {
            let schema = cfg.instance.schema().expect("csv instance has a schema");
            let ing = ingest_credit_csv(path, &schema).with_context(|| format!("ingesting {path}"))?;
            (ing.dataset, ing.sample_space, None, ing.dropped_rows)
        }
    };
    let mask: Vec<bool> = match cfg.model.adversary {
        Adversary::Strategic => dataset.strategic_mask().to_vec(),
        Adversary::AllFeatures => dataset.feature_names().iter().map(|n| n != INTERCEPT).collect(),
    };
    let sample_space = SampleSpace::new(space.lo().to_vec(), space.hi().to_vec(), mask, space.is_labeled())?;
    let kind = match (&cfg.model.loss, &synth) {
        (LossSpec::Instance, Some(s)) => s.loss.clone(),
        (LossSpec::Instance, None) => bail!("model.loss = instance needs a synthetic instance"),
        (LossSpec::Logistic, _) => LossKind::Logistic,
        (LossSpec::RidgeLogistic { ridge }, _) => LossKind::RidgeLogistic { ridge: *ridge },
    };
    if matches!(kind, LossKind::Logistic | LossKind::RidgeLogistic { .. }) && !dataset.is_labeled() {
        bail!("logistic loss needs a labeled instance");
    }
    let theta_space = ParamSpace::origin_ball(dataset.dim(), cfg.model.theta_radius)?;
    let loss = LossModel::analytic(kind, &theta_space, &sample_space)?;
    Ok(Prepared {
        dataset: Arc::new(dataset),
        sample_space,
        loss,
        theta_space,
        synth,
        dropped_rows: dropped,
    })
}

impl Prepared {
    pub fn penalty(&self, spec: &PenaltyConfig) -> anyhow::Result<PenaltyFunction> {
        let kind = match *spec {
            PenaltyConfig::Constant { lambda_c } => PenaltyKind::Constant { lambda_c },
            PenaltyConfig::Quadratic { lambda_c, coef } => PenaltyKind::Quadratic { lambda_c, coef },
        };
        Ok(PenaltyFunction::new(kind, &self.theta_space)?)
    }

    pub fn problem(&self, spec: &PenaltyConfig) -> anyhow::Result<RobustProblem> {
        Ok(RobustProblem::new(
            self.loss.clone(),
            self.penalty(spec)?,
            self.theta_space.clone(),
            self.sample_space.clone(),
        )?)
    }

    pub fn env0(&self, seed: u64) -> anyhow::Result<EnvState> {
        Ok(EnvState::new(
            Arc::clone(&self.dataset),
            self.sample_space.clone(),
            seed,
            ShiftReference::Base,
        )?)
    }

    pub fn ledger(&self, problem: &RobustProblem, epsilon_sens: f64) -> anyhow::Result<RegularityLedger> {
        Ok(problem.ledger(epsilon_sens)?)
    }

    /// Strategic sub-vector of `theta`.
    pub fn strategic_part(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.dataset.strategic_mask())
            .filter(|(_, m)| **m)
            .map(|(t, _)| *t)
            .collect()
    }
}
