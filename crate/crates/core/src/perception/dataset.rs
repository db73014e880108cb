use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;

/// Training pairs `(z_t, y_t)` with the noise and reset levels they were
/// collected under.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Vector>,
    labels: Vec<Vector>,
    /// Certificate noise level `σ_η`.
    pub sigma_eta: f64,
    /// Reset radius `σ_0`.
    pub sigma_0: f64,
    truth: Option<Vec<Vector>>,
}

impl Dataset {
    pub fn new(
        observations: Vec<Vector>,
        labels: Vec<Vector>,
        sigma_eta: f64,
        sigma_0: f64,
    ) -> Result<Self> {
        check_dim("labels", observations.len(), labels.len())?;
        if let (Some(z0), Some(y0)) = (observations.first(), labels.first()) {
            if observations.iter().any(|z| z.len() != z0.len())
                || labels.iter().any(|y| y.len() != y0.len())
            {
                return Err(Error::InvalidInput("ragged dataset".into()));
            }
        }
        Ok(Self {
            observations,
            labels,
            sigma_eta,
            sigma_0,
            truth: None,
        })
    }

    /// Attaches the noiseless outputs `Cx_t` (simulation only).
    pub fn with_truth(mut self, truth: Vec<Vector>) -> Result<Self> {
        check_dim("ground truth", self.labels.len(), truth.len())?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn observations(&self) -> &[Vector] {
        &self.observations
    }

    pub fn labels(&self) -> &[Vector] {
        &self.labels
    }

    pub fn truth(&self) -> Option<&[Vector]> {
        self.truth.as_deref()
    }

    /// Label dimension (0 when empty).
    pub fn p(&self) -> usize {
        self.labels.first().map_or(0, |y| y.len())
    }

    /// Observation dimension (0 when empty).
    pub fn q(&self) -> usize {
        self.observations.first().map_or(0, |z| z.len())
    }

    /// Replaces the labels, keeping everything else.
    pub fn relabel(&self, labels: Vec<Vector>) -> Result<Self> {
        check_dim("labels", self.labels.len(), labels.len())?;
        let mut out = self.clone();
        out.labels = labels;
        Ok(out)
    }
}
