//! Reference signals with bounded values and bounded increments.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::perception::uniform_box;

/// Slack on the class checks for rounding in generated signals.
const CLASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    values: Vec<Vector>,
    r_max: f64,
    delta: f64,
}

impl ReferenceSignal {
    /// Evaluates `k ↦ x_ref_k` for `k = 0..len` and checks
    /// `‖x_ref_k‖_∞ ≤ r_max` and `‖x_ref_{k+1} − x_ref_k‖_∞ ≤ Δ`.
    pub fn from_fn<F>(len: usize, r_max: f64, delta: f64, f: F) -> Result<Self>
    where
        F: FnMut(usize) -> Vector,
    {
        Self::from_values((0..len).map(f).collect(), r_max, delta)
    }

    pub fn from_values(values: Vec<Vector>, r_max: f64, delta: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("reference needs at least one value".into()));
        }
        for (k, v) in values.iter().enumerate() {
            let size = linalg::vec_inf_norm(v);
            if !(size <= r_max * (1.0 + CLASS_SLACK) + CLASS_SLACK) {
                return Err(Error::ReferenceOutOfClass {
                    step: k,
                    reason: format!("‖x_ref‖∞ = {size} exceeds r_max = {r_max}"),
                });
            }
            if k > 0 {
                let jump = linalg::vec_inf_norm(&(v - &values[k - 1]));
                if !(jump <= delta * (1.0 + CLASS_SLACK) + CLASS_SLACK) {
                    return Err(Error::ReferenceOutOfClass {
                        step: k,
                        reason: format!("increment {jump} exceeds Δ = {delta}"),
                    });
                }
            }
        }
        Ok(Self { values, r_max, delta })
    }

    /// A reference with no class restriction.
    pub fn unrestricted(values: Vec<Vector>) -> Result<Self> {
        Self::from_values(values, f64::INFINITY, f64::INFINITY)
    }

    /// Constant zero reference.
    pub fn zero(n: usize, len: usize) -> Self {
        Self {
            values: alloc::vec![Vector::zeros(n); len.max(1)],
            r_max: 0.0,
            delta: 0.0,
        }
    }

    /// Value at step `k`; the last value is held past the end.
    pub fn at(&self, k: usize) -> &Vector {
        &self.values[k.min(self.values.len() - 1)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn values(&self) -> &[Vector] {
        &self.values
    }
}

/// Random walk `x_ref = Eρ` from `ρ_{−1} = 0` with increments uniform in a
/// box and values clipped to the class box.
pub fn random_admissible_reference<R: Rng + ?Sized>(
    rng: &mut R,
    embedding: &Mat,
    len: usize,
    r_max: f64,
    delta: f64,
) -> Result<ReferenceSignal> {
    let d = embedding.ncols();
    let gain = linalg::inf_norm(embedding).max(f64::MIN_POSITIVE);
    let (bound, step) = (r_max / gain, delta / gain);
    let mut rho = Vector::zeros(d);
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        rho += uniform_box(rng, d, step);
        rho.apply(|v| *v = v.clamp(-bound, bound));
        values.push(embedding * &rho);
    }
    ReferenceSignal::from_values(values, r_max, delta)
}
