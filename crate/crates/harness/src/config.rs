//! Experiment configuration (TOML).

use std::path::Path;

use anyhow::{bail, Context};
use drpp_core::{Algorithm, ArgminConfig, InnerSolveConfig, StartRule, StepRule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::{IngestSchema, CREDIT_STRATEGIC, CREDIT_TARGET, DEFAULT_BOX};
use crate::synth::{SynthKind, DEFAULT_POSITIVE_RATE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub outer_iters: usize,
    pub algorithms: Vec<Algorithm>,
    /// Record per-iteration wall time in the run log. Off by default so logs
    /// are reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    pub instance: InstanceConfig,
    pub model: ModelConfig,
    pub penalty: PenaltyConfig,
    pub sweep: SweepConfig,
    pub inner: InnerConfig,
    pub argmin: ArgminSection,
    pub rgd: RgdSection,
    #[serde(default)]
    pub batch: BatchSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    Synthetic {
        kind: SynthKind,
        dim: usize,
        n: usize,
        seed: u64,
        #[serde(default = "default_positive_rate")]
        positive_rate: f64,
        #[serde(default = "default_box")]
        box_half_width: f64,
    },
    CreditCsv {
        path: String,
        #[serde(default = "default_target")]
        target: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<Vec<String>>,
        #[serde(default = "default_strategic")]
        strategic: Vec<String>,
        #[serde(default = "default_box")]
        box_half_width: f64,
    },
}

fn default_positive_rate() -> f64 {
    DEFAULT_POSITIVE_RATE
}
fn default_box() -> f64 {
    DEFAULT_BOX
}
fn default_target() -> String {
    CREDIT_TARGET.into()
}
fn default_strategic() -> Vec<String> {
    CREDIT_STRATEGIC.iter().map(|s| s.to_string()).collect()
}

impl InstanceConfig {
    pub fn schema(&self) -> Option<IngestSchema> {
        match self {
            InstanceConfig::CreditCsv {
                target,
                features,
                strategic,
                box_half_width,
                ..
            } => Some(IngestSchema {
                target: target.clone(),
                features: features.clone(),
                strategic: strategic.clone(),
                box_half_width: *box_half_width,
            }),
            InstanceConfig::Synthetic { .. } => None,
        }
    }
}

/// Which coordinates the inner adversary may move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    /// The strategic features only.
    Strategic,
    /// Every feature except the intercept.
    AllFeatures,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theta0 {
    /// Non-robust fit on the undeployed base data.
    StaticErm,
    /// Limit of robust retraining on the undeployed base data.
    RobustErm,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LossSpec {
    /// The loss the synthetic instance was built for.
    Instance,
    Logistic,
    RidgeLogistic { ridge: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub loss: LossSpec,
    /// Radius of the parameter ball around the origin.
    pub theta_radius: f64,
    pub adversary: Adversary,
    pub theta0: Theta0,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltyConfig {
    Constant { lambda_c: f64 },
    Quadratic { lambda_c: f64, coef: f64 },
}

impl PenaltyConfig {
    pub fn lambda_c(&self) -> f64 {
        match self {
            PenaltyConfig::Constant { lambda_c } | PenaltyConfig::Quadratic { lambda_c, .. } => *lambda_c,
        }
    }

    pub fn with_lambda_c(&self, lambda_c: f64) -> Self {
        match self {
            PenaltyConfig::Constant { .. } => PenaltyConfig::Constant { lambda_c },
            PenaltyConfig::Quadratic { coef, .. } => PenaltyConfig::Quadratic { lambda_c, coef: *coef },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Sensitivity levels in reporting units.
    pub epsilons: Vec<f64>,
    /// Factor turning reporting units into normalized feature units.
    pub epsilon_scale: f64,
    /// Multiplier offsets for the detection-vs-iteration series.
    #[serde(default)]
    pub lambda_c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub warm_start: bool,
    /// Fixed ascent step; the Lipschitz step when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl InnerConfig {
    pub fn to_core(&self) -> InnerSolveConfig {
        InnerSolveConfig {
            inner_tol: self.tol,
            max_ascent_iters: self.max_iters,
            step_rule: match self.step {
                Some(step) => StepRule::Fixed { step },
                None => StepRule::Lipschitz,
            },
            start_rule: if self.warm_start {
                StartRule::WarmStart
            } else {
                StartRule::AtXi
            },
            closed_form: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgminSection {
    pub tol: f64,
    pub max_iters: usize,
}

impl ArgminSection {
    pub fn to_core(&self) -> ArgminConfig {
        ArgminConfig {
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RgdSection {
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSection {
    /// `0` means full batch.
    pub size: usize,
}

impl Default for BatchSection {
    fn default() -> Self {
        Self { size: 0 }
    }
}

impl Default for ExperimentConfig {
    /// The credit-scoring study on the synthetic stand-in.
    fn default() -> Self {
        Self {
            name: "credit".into(),
            seed: 7,
            outer_iters: 20,
            algorithms: vec![
                Algorithm::Rrm,
                Algorithm::PpRrm,
                Algorithm::Static,
                Algorithm::Rgd,
                Algorithm::PpRgd,
            ],
            timing: false,
            instance: InstanceConfig::Synthetic {
                kind: SynthKind::LogisticGaussian,
                dim: 10,
                n: 1000,
                seed: 2024,
                positive_rate: DEFAULT_POSITIVE_RATE,
                box_half_width: DEFAULT_BOX,
            },
            model: ModelConfig {
                loss: LossSpec::RidgeLogistic { ridge: 1e-3 },
                theta_radius: 10.0,
                adversary: Adversary::Strategic,
                theta0: Theta0::RobustErm,
            },
            penalty: PenaltyConfig::Quadratic {
                lambda_c: 100.0,
                coef: 0.1,
            },
            sweep: SweepConfig {
                epsilons: vec![1.0, 10.0, 60.0, 100.0],
                epsilon_scale: 1e-4,
                lambda_c: vec![30.0, 100.0, 300.0],
            },
            inner: InnerConfig {
                tol: 1e-9,
                max_iters: 10_000,
                warm_start: true,
                step: None,
            },
            argmin: ArgminSection {
                tol: 1e-10,
                max_iters: 200_000,
            },
            rgd: RgdSection { eta: 1e-2 },
            batch: BatchSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Loads a config and applies `key=value` overrides; dotted keys reach
    /// into sections, values are TOML literals or bare strings.
    pub fn load_with_overrides(path: impl AsRef<Path>, overrides: &[(String, String)]) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut value: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for (k, v) in overrides {
            set_dotted(&mut value, k, parse_literal(v))?;
        }
        let cfg: Self = value.try_into().context("applying overrides")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Hex prefix of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let text = self.to_toml().unwrap_or_default();
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.outer_iters == 0 {
            bail!("outer_iters must be >= 1");
        }
        if self.algorithms.is_empty() {
            bail!("no algorithms selected");
        }
        if self.sweep.epsilons.is_empty() {
            bail!("sweep.epsilons must be non-empty");
        }
        if self.sweep.epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            bail!("every epsilon must be finite and >= 0");
        }
        if !(self.sweep.epsilon_scale > 0.0 && self.sweep.epsilon_scale.is_finite()) {
            bail!("sweep.epsilon_scale must be positive");
        }
        if self.sweep.lambda_c.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            bail!("sweep.lambda_c entries must be finite and >= 0");
        }
        if !(self.model.theta_radius > 0.0 && self.model.theta_radius.is_finite()) {
            bail!("model.theta_radius must be positive");
        }
        if !(self.rgd.eta >= 0.0 && self.rgd.eta.is_finite()) {
            bail!("rgd.eta must be finite and >= 0");
        }
        self.inner.to_core().validate()?;
        if !(self.argmin.tol > 0.0) || self.argmin.max_iters == 0 {
            bail!("argmin.tol must be > 0 and argmin.max_iters >= 1");
        }
        Ok(())
    }
}

fn parse_literal(v: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {v}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> anyhow::Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).with_context(|| format!("empty override key {key:?}"))?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("override {key:?}: {p:?} is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Splits `--key=value` / `key=value` arguments.
pub fn parse_overrides(args: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    args.iter()
        .map(|a| {
            let body = a.strip_prefix("--").unwrap_or(a);
            let (k, v) = body
                .split_once('=')
                .with_context(|| format!("override {a:?} is not of the form --key=value"))?;
            Ok((k.to_string(), v.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_stable() {
        let cfg = ExperimentConfig::default();
        let a = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&a).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml().unwrap(), a);
    }

    #[test]
    fn csv_instance_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.instance = InstanceConfig::CreditCsv {
            path: "cs-training.csv".into(),
            target: CREDIT_TARGET.into(),
            features: Some(vec!["age".into()]),
            strategic: vec![],
            box_half_width: 4.0,
        };
        let a = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&a).unwrap().to_toml().unwrap(), a);
    }

    #[test]
    fn overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, ExperimentConfig::default().to_toml().unwrap()).unwrap();
        let ov = parse_overrides(&[
            "--outer_iters=3".into(),
            "--sweep.epsilons=[2.0]".into(),
            "--name=quick".into(),
            "--penalty.lambda_c=40".into(),
        ])
        .unwrap();
        let cfg = ExperimentConfig::load_with_overrides(&p, &ov).unwrap();
        assert_eq!(cfg.outer_iters, 3);
        assert_eq!(cfg.sweep.epsilons, vec![2.0]);
        assert_eq!(cfg.name, "quick");
        assert_eq!(cfg.penalty.lambda_c(), 40.0);
        assert!(parse_overrides(&["--oops".into()]).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.epsilons.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.epsilons = vec![-1.0];
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("name = 1").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed += 1;
        assert_eq!(a.hash().len(), 16);
        assert_ne!(a.hash(), b.hash());
    }
}
