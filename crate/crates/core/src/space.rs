//! Parameter space `Theta`, sample space `Xi` and the transport cost.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, DrppError, Result};
use crate::linalg::{dist_sq, norm};

/// Default slack used by [`ParamSpace::contains`] so that projecting a
/// projected point returns it bit-for-bit.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSpaceKind {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Unconstrained,
}

/// Closed convex constraint set for the model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub kind: ParamSpaceKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_PROJECTION_TOL
}

impl ParamSpace {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        ensure_finite("ball center", &center)?;
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(DrppError::InvalidArgument(format!("ball radius {radius}")));
        }
        Ok(Self {
            kind: ParamSpaceKind::Ball { center, radius },
            tol: DEFAULT_PROJECTION_TOL,
        })
    }

    /// Ball centered at the origin.
    pub fn origin_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(vec![0.0; dim], radius)
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        ensure_dim("box bounds", lo.len(), hi.len())?;
        ensure_finite("box lo", &lo)?;
        ensure_finite("box hi", &hi)?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(DrppError::InvalidArgument("box with lo > hi".into()));
        }
        Ok(Self {
            kind: ParamSpaceKind::Box { lo, hi },
            tol: DEFAULT_PROJECTION_TOL,
        })
    }

    pub fn unconstrained() -> Self {
        Self {
            kind: ParamSpaceKind::Unconstrained,
            tol: DEFAULT_PROJECTION_TOL,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            ParamSpaceKind::Ball { center, .. } => Some(center.len()),
            ParamSpaceKind::Box { lo, .. } => Some(lo.len()),
            ParamSpaceKind::Unconstrained => None,
        }
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        match self.dim() {
            Some(d) => ensure_dim("parameter space", d, theta.len()),
            None => Ok(()),
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if self.check_dim(theta).is_err() {
            return false;
        }
        match &self.kind {
            ParamSpaceKind::Ball { center, radius } => {
                dist_sq(theta, center).sqrt() <= radius * (1.0 + self.tol)
            }
            ParamSpaceKind::Box { lo, hi } => theta
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(t, (l, h))| *t >= *l && *t <= *h),
            ParamSpaceKind::Unconstrained => true,
        }
    }

    /// Euclidean projection. Points already inside (up to `tol` for balls)
    /// are returned unchanged, which makes the map exactly idempotent.
    pub fn project(&self, theta: &[f64]) -> Result<Vec<f64>> {
        ensure_finite("project_params", theta)?;
        self.check_dim(theta)?;
        Ok(self.project_unchecked(theta))
    }

    pub(crate) fn project_unchecked(&self, theta: &[f64]) -> Vec<f64> {
        match &self.kind {
            ParamSpaceKind::Ball { center, radius } => {
                let d = dist_sq(theta, center).sqrt();
                if d <= radius * (1.0 + self.tol) {
                    theta.to_vec()
                } else {
                    let s = radius / d;
                    theta
                        .iter()
                        .zip(center)
                        .map(|(t, c)| c + (t - c) * s)
                        .collect()
                }
            }
            ParamSpaceKind::Box { lo, hi } => theta
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(t, (l, h))| t.clamp(*l, *h))
                .collect(),
            ParamSpaceKind::Unconstrained => theta.to_vec(),
        }
    }

    /// `sup ||theta||` over the set (infinite when unconstrained).
    pub fn max_norm(&self) -> f64 {
        match &self.kind {
            ParamSpaceKind::Ball { center, radius } => norm(center) + radius,
            ParamSpaceKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            ParamSpaceKind::Unconstrained => f64::INFINITY,
        }
    }

    /// `inf ||theta||` over the set.
    pub fn min_norm(&self) -> f64 {
        match &self.kind {
            ParamSpaceKind::Ball { center, radius } => (norm(center) - radius).max(0.0),
            ParamSpaceKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| 0.0f64.clamp(*l, *h).powi(2))
                .sum::<f64>()
                .sqrt(),
            ParamSpaceKind::Unconstrained => 0.0,
        }
    }
}

/// Compact box `Xi = [lo, hi]` holding samples and adversarial perturbations.
///
/// `strategic_mask[j]` marks coordinate `j` as perturbable by the inner
/// adversary. Masked-out coordinates (the intercept slot, non-manipulable
/// features) are pinned to the reference sample and never enter the
/// transport cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpace {
    lo: Vec<f64>,
    hi: Vec<f64>,
    strategic_mask: Vec<bool>,
    labeled: bool,
    diameter: f64,
}

impl SampleSpace {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, strategic_mask: Vec<bool>, labeled: bool) -> Result<Self> {
        ensure_dim("sample space bounds", lo.len(), hi.len())?;
        ensure_dim("sample space mask", lo.len(), strategic_mask.len())?;
        ensure_finite("sample space lo", &lo)?;
        ensure_finite("sample space hi", &hi)?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(DrppError::InvalidArgument("sample space with lo > hi".into()));
        }
        let diameter = dist_sq(&lo, &hi).sqrt();
        Ok(Self {
            lo,
            hi,
            strategic_mask,
            labeled,
            diameter,
        })
    }

    /// `[-b, b]^dim` with every coordinate perturbable.
    pub fn symmetric(dim: usize, b: f64, labeled: bool) -> Result<Self> {
        Self::new(vec![-b; dim], vec![b; dim], vec![true; dim], labeled)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn strategic_mask(&self) -> &[bool] {
        &self.strategic_mask
    }

    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    /// `D_xi = ||hi - lo||_2`, stored at construction.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `sup ||x||` over the box.
    pub fn max_norm(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l.abs().max(h.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Projection of a perturbation: perturbable coordinates are clamped into
    /// the box, the others are copied from `reference`.
    pub fn project(&self, zeta: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
        ensure_dim("project_sample", self.dim(), zeta.len())?;
        ensure_dim("project_sample reference", self.dim(), reference.len())?;
        ensure_finite("project_sample", zeta)?;
        let mut out = zeta.to_vec();
        self.project_in_place(&mut out, reference);
        Ok(out)
    }

    pub(crate) fn project_in_place(&self, zeta: &mut [f64], reference: &[f64]) {
        for (j, z) in zeta.iter_mut().enumerate() {
            *z = if self.strategic_mask[j] {
                z.clamp(self.lo[j], self.hi[j])
            } else {
                reference[j]
            };
        }
    }

    /// Clamp every coordinate into the box; returns how many moved.
    pub fn clamp_in_place(&self, x: &mut [f64]) -> usize {
        let mut moved = 0;
        for (j, v) in x.iter_mut().enumerate() {
            let c = v.clamp(self.lo[j], self.hi[j]);
            if c != *v {
                moved += 1;
                *v = c;
            }
        }
        moved
    }

    /// Squared Euclidean distance restricted to perturbable coordinates.
    pub fn cost(&self, xi: &[f64], zeta: &[f64]) -> Result<f64> {
        ensure_dim("transport cost", self.dim(), xi.len())?;
        ensure_dim("transport cost", self.dim(), zeta.len())?;
        Ok(self.cost_unchecked(xi, zeta))
    }

    #[inline]
    pub(crate) fn cost_unchecked(&self, xi: &[f64], zeta: &[f64]) -> f64 {
        xi.iter()
            .zip(zeta)
            .zip(&self.strategic_mask)
            .filter(|(_, m)| **m)
            .map(|((a, b), _)| (a - b) * (a - b))
            .sum()
    }
}

/// A data point: feature vector (intercept slot included when the model uses
/// one) and an optional binary label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub xi: Vec<f64>,
    pub label: Option<u8>,
}

impl Sample {
    pub fn new(xi: Vec<f64>, label: Option<u8>) -> Result<Self> {
        ensure_finite("sample", &xi)?;
        if let Some(y) = label {
            if y > 1 {
                return Err(DrppError::InvalidArgument(format!("label {y} not in {{0,1}}")));
            }
        }
        Ok(Self { xi, label })
    }

    pub fn unlabeled(xi: Vec<f64>) -> Self {
        Self { xi, label: None }
    }

    pub fn labeled(xi: Vec<f64>, label: u8) -> Self {
        Self {
            xi,
            label: Some(label),
        }
    }

    pub fn y(&self) -> Option<f64> {
        self.label.map(f64::from)
    }
}

/// `c(xi, zeta) = ||xi - zeta||_2^2`.
pub fn transport_cost(xi: &[f64], zeta: &[f64]) -> Result<f64> {
    ensure_dim("transport_cost", xi.len(), zeta.len())?;
    ensure_finite("transport_cost xi", xi)?;
    ensure_finite("transport_cost zeta", zeta)?;
    Ok(dist_sq(xi, zeta))
}
