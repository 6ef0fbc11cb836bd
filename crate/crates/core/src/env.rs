//! Decision-dependent data distribution `P(theta)`.
//!
//! Agents respond to a deployed model by moving their strategic features
//! against the model's weights: `x^S <- x^S - eps * theta^S`. By default the
//! response is applied to the immutable base dataset, so the distribution
//! depends on the latest deployment only.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, DrppError, Result};
use crate::space::{Sample, SampleSpace};

/// Per-feature affine map applied at ingestion: `x_norm = (x - mean) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseDataset {
    samples: Vec<Sample>,
    feature_names: Vec<String>,
    strategic_mask: Vec<bool>,
    normalization: Option<Normalization>,
}

impl BaseDataset {
    pub fn new(
        samples: Vec<Sample>,
        feature_names: Vec<String>,
        strategic_mask: Vec<bool>,
        normalization: Option<Normalization>,
    ) -> Result<Self> {
        let dim = strategic_mask.len();
        if samples.is_empty() {
            return Err(DrppError::InvalidArgument("dataset has no samples".into()));
        }
        ensure_dim("feature names", dim, feature_names.len())?;
        let labeled = samples[0].label.is_some();
        for s in &samples {
            ensure_dim("dataset sample", dim, s.xi.len())?;
            ensure_finite("dataset sample", &s.xi)?;
            if s.label.is_some() != labeled {
                return Err(DrppError::InvalidArgument("mixed labeled and unlabeled samples".into()));
            }
            if s.label.is_some_and(|y| y > 1) {
                return Err(DrppError::InvalidArgument("labels must be 0 or 1".into()));
            }
        }
        Ok(Self {
            samples,
            feature_names,
            strategic_mask,
            normalization,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn strategic_mask(&self) -> &[bool] {
        &self.strategic_mask
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.strategic_mask.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.samples[0].label.is_some()
    }

    pub fn positive_fraction(&self) -> Option<f64> {
        self.is_labeled().then(|| {
            self.samples.iter().filter(|s| s.label == Some(1)).count() as f64 / self.len() as f64
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftMap {
    Identity,
    LinearStrategic { epsilon_sens: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftReference {
    /// Shift the base dataset: `P(theta)` is a function of `theta`.
    #[default]
    Base,
    /// Shift the current state, so responses accumulate across rounds.
    /// Exploratory only; no sensitivity certificate.
    Compounding,
}

impl ShiftMap {
    pub fn linear(epsilon_sens: f64) -> Result<Self> {
        let m = ShiftMap::LinearStrategic { epsilon_sens };
        m.validate()?;
        Ok(m)
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            ShiftMap::Identity => 0.0,
            ShiftMap::LinearStrategic { epsilon_sens } => *epsilon_sens,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.epsilon();
        if e.is_finite() && e >= 0.0 {
            Ok(())
        } else {
            Err(DrppError::InvalidArgument(format!("epsilon_sens = {e}")))
        }
    }

    /// Sensitivity `eps` with `W1(P(theta), P(theta')) <= eps ||theta - theta'||`.
    pub fn sensitivity_certificate(&self, reference: ShiftReference) -> Result<f64> {
        self.validate()?;
        match (self, reference) {
            (ShiftMap::Identity, _) => Ok(0.0),
            (ShiftMap::LinearStrategic { epsilon_sens }, ShiftReference::Base) => Ok(*epsilon_sens),
            (ShiftMap::LinearStrategic { .. }, ShiftReference::Compounding) => Err(DrppError::Unsupported(
                "compounding shifts are not a map of theta; no sensitivity certificate".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "n", rename_all = "snake_case")]
pub enum BatchSize {
    /// The whole current dataset in stored order.
    Full,
    /// `n` draws, uniform with replacement.
    Uniform(usize),
}

/// Snapshot of the deployed environment. `deploy` returns a new snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    base: Arc<BaseDataset>,
    space: SampleSpace,
    current: Vec<Sample>,
    deployed_theta: Option<Vec<f64>>,
    rng_seed: u64,
    epoch: u64,
    clamped_coords: usize,
    reference: ShiftReference,
}

impl EnvState {
    pub fn new(base: Arc<BaseDataset>, space: SampleSpace, rng_seed: u64, reference: ShiftReference) -> Result<Self> {
        ensure_dim("sample space vs dataset", base.dim(), space.dim())?;
        if let Some(i) = base.samples().iter().position(|s| !space.contains(&s.xi)) {
            return Err(DrppError::InvalidArgument(format!("base sample {i} lies outside the sample space")));
        }
        Ok(Self {
            current: base.samples().to_vec(),
            base,
            space,
            deployed_theta: None,
            rng_seed,
            epoch: 0,
            clamped_coords: 0,
            reference,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.current
    }

    pub fn base(&self) -> &Arc<BaseDataset> {
        &self.base
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn deployed_theta(&self) -> Option<&[f64]> {
        self.deployed_theta.as_deref()
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn reference(&self) -> ShiftReference {
        self.reference
    }

    /// Coordinates clamped back into `Xi` by the latest deployment.
    pub fn clamped_coords(&self) -> usize {
        self.clamped_coords
    }

    pub fn deploy(&self, theta: &[f64], map: &ShiftMap) -> Result<EnvState> {
        map.validate()?;
        ensure_dim("deployed theta", self.base.dim(), theta.len())?;
        ensure_finite("deployed theta", theta)?;
        let eps = map.epsilon();
        let mask = self.base.strategic_mask();
        let (lo, hi) = (self.space.lo(), self.space.hi());
        let source = match self.reference {
            ShiftReference::Base => self.base.samples(),
            ShiftReference::Compounding => &self.current,
        };
        let mut clamped = 0;
        let current = source
            .iter()
            .map(|s| {
                let mut x = s.xi.clone();
                if eps != 0.0 {
                    for j in 0..x.len() {
                        if mask[j] {
                            let v = x[j] - eps * theta[j];
                            let c = v.clamp(lo[j], hi[j]);
                            if c != v {
                                clamped += 1;
                            }
                            x[j] = c;
                        }
                    }
                }
                Sample { xi: x, label: s.label }
            })
            .collect();
        Ok(EnvState {
            base: Arc::clone(&self.base),
            space: self.space.clone(),
            current,
            deployed_theta: Some(theta.to_vec()),
            rng_seed: self.rng_seed,
            epoch: self.epoch + 1,
            clamped_coords: clamped,
            reference: self.reference,
        })
    }

    /// Batch from the current distribution. Uniform draws are keyed by
    /// `(seed, epoch)` and reproducible.
    pub fn draw_batch(&self, size: BatchSize, seed: u64) -> Result<Vec<Sample>> {
        if self.current.is_empty() {
            return Err(DrppError::State("empty dataset".into()));
        }
        match size {
            BatchSize::Full => Ok(self.current.clone()),
            BatchSize::Uniform(0) => Err(DrppError::InvalidArgument("batch size must be >= 1".into())),
            BatchSize::Uniform(n) => {
                let idx = self.batch_indices(n, seed);
                Ok(idx.into_iter().map(|i| self.current[i].clone()).collect())
            }
        }
    }

    pub fn batch_indices(&self, n: usize, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.epoch);
        let m = self.current.len();
        (0..n).map(|_| rng.random_range(0..m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(xs: &[[f64; 3]], mask: [bool; 3]) -> Arc<BaseDataset> {
        let samples = xs.iter().map(|x| Sample::labeled(x.to_vec(), 0)).collect();
        Arc::new(
            BaseDataset::new(samples, vec!["a".into(), "b".into(), "c".into()], mask.to_vec(), None).unwrap(),
        )
    }

    fn env(xs: &[[f64; 3]], b: f64) -> EnvState {
        let d = dataset(xs, [true; 3]);
        EnvState::new(d, SampleSpace::symmetric(3, b, true).unwrap(), 7, ShiftReference::Base).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let e = env(&[[0.5, 0.5, 0.5], [1.0, -1.0, 0.0]], 10.0);
        let a = e.deploy(&[0.0; 3], &ShiftMap::linear(3.0).unwrap()).unwrap();
        assert_eq!(a.samples(), e.samples());
        let b = e.deploy(&[1.0, 2.0, 3.0], &ShiftMap::linear(0.0).unwrap()).unwrap();
        assert_eq!(b.samples(), e.samples());
        assert_eq!(b.epoch(), 1);
    }

    #[test]
    fn linear_shift_arithmetic() {
        let e = env(&[[0.5, 0.5, 0.5]], 10.0);
        let s = e.deploy(&[0.2, -0.1, 0.0], &ShiftMap::linear(1.0).unwrap()).unwrap();
        let x = &s.samples()[0].xi;
        assert!((x[0] - 0.3).abs() < 1e-15 && (x[1] - 0.6).abs() < 1e-15 && x[2] == 0.5);
    }

    #[test]
    fn only_strategic_coordinates_move() {
        let d = dataset(&[[0.5, 0.5, 1.0]], [true, false, false]);
        let e = EnvState::new(d, SampleSpace::symmetric(3, 10.0, true).unwrap(), 0, ShiftReference::Base).unwrap();
        let s = e.deploy(&[1.0, 1.0, 1.0], &ShiftMap::linear(0.5).unwrap()).unwrap();
        assert_eq!(s.samples()[0].xi, vec![0.0, 0.5, 1.0]);
        assert_eq!(s.samples()[0].label, Some(0));
    }

    #[test]
    fn shifts_are_base_referenced() {
        let e = env(&[[0.5, 0.5, 0.5], [-1.0, 0.2, 0.3]], 10.0);
        let m = ShiftMap::linear(0.7).unwrap();
        let twice = e.deploy(&[1.0, 0.0, 2.0], &m).unwrap().deploy(&[0.3, -0.4, 0.1], &m).unwrap();
        let once = e.deploy(&[0.3, -0.4, 0.1], &m).unwrap();
        assert_eq!(twice.samples(), once.samples());
    }

    #[test]
    fn compounding_accumulates() {
        let d = dataset(&[[0.5, 0.5, 0.5]], [true; 3]);
        let e = EnvState::new(d, SampleSpace::symmetric(3, 10.0, true).unwrap(), 0, ShiftReference::Compounding).unwrap();
        let m = ShiftMap::linear(1.0).unwrap();
        let s = e.deploy(&[0.1, 0.0, 0.0], &m).unwrap().deploy(&[0.1, 0.0, 0.0], &m).unwrap();
        assert!((s.samples()[0].xi[0] - 0.3).abs() < 1e-15);
        assert!(m.sensitivity_certificate(ShiftReference::Compounding).is_err());
    }

    #[test]
    fn clamping_is_counted() {
        let e = env(&[[0.9, 0.0, 0.0]], 1.0);
        let s = e.deploy(&[-1.0, 0.0, 0.0], &ShiftMap::linear(1.0).unwrap()).unwrap();
        assert_eq!(s.samples()[0].xi[0], 1.0);
        assert_eq!(s.clamped_coords(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let e = env(&[[0.0; 3]], 1.0);
        assert!(e.deploy(&[0.0; 2], &ShiftMap::linear(1.0).unwrap()).is_err());
    }

    #[test]
    fn batches() {
        let xs: Vec<[f64; 3]> = (0..50).map(|i| [i as f64 / 100.0, 0.0, 0.0]).collect();
        let e = env(&xs, 1.0);
        assert_eq!(e.draw_batch(BatchSize::Full, 1).unwrap(), e.samples());
        let a = e.draw_batch(BatchSize::Uniform(10), 3).unwrap();
        assert_eq!(a, e.draw_batch(BatchSize::Uniform(10), 3).unwrap());
        let mut differ = 0;
        for seed in 0..20 {
            if e.batch_indices(10, seed) != e.batch_indices(10, seed + 100) {
                differ += 1;
            }
        }
        assert_eq!(differ, 20);
        // a new epoch gives a different stream
        let next = e.deploy(&[0.0; 3], &ShiftMap::Identity).unwrap();
        assert_ne!(e.batch_indices(10, 3), next.batch_indices(10, 3));
        assert!(e.draw_batch(BatchSize::Uniform(0), 0).is_err());
    }

    #[test]
    fn certificates() {
        assert_eq!(ShiftMap::Identity.sensitivity_certificate(ShiftReference::Base).unwrap(), 0.0);
        assert_eq!(ShiftMap::linear(2.5).unwrap().sensitivity_certificate(ShiftReference::Base).unwrap(), 2.5);
        assert!(ShiftMap::linear(-1.0).is_err());
    }
}
