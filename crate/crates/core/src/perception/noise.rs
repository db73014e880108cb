use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Zero-mean Gaussian noise clipped entry-wise to `[−clip, clip]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub std: f64,
    pub clip: f64,
}

impl NoiseSpec {
    pub fn new(std: f64, clip: f64) -> Result<Self> {
        if !(std >= 0.0 && clip >= 0.0) || !std.is_finite() {
            return Err(Error::InvalidInput(
                "noise std and clip must be nonnegative".into(),
            ));
        }
        Ok(Self { std, clip })
    }

    pub fn zero() -> Self {
        Self { std: 0.0, clip: 0.0 }
    }

    /// Almost-sure bound on each entry.
    pub fn bound(&self) -> f64 {
        if self.std == 0.0 {
            0.0
        } else {
            self.clip
        }
    }

    /// Level `σ` such that every entry is `σ/2` sub-Gaussian: the clip bound,
    /// or twice the standard deviation when that is smaller.
    pub fn certificate_level(&self) -> f64 {
        self.bound().min(2.0 * self.std)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, dim: usize) -> Vector {
        if self.std == 0.0 {
            return Vector::zeros(dim);
        }
        let normal = Normal::new(0.0, self.std).expect("std validated");
        Vector::from_fn(dim, |_, _| normal.sample(rng).clamp(-self.clip, self.clip))
    }
}

/// Uniform draw from the ∞-ball of the given radius.
pub fn uniform_box<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    if radius == 0.0 {
        return Vector::zeros(dim);
    }
    Vector::from_fn(dim, |_, _| rng.random_range(-radius..=radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn samples_respect_clip() {
        let spec = NoiseSpec::new(1.0, 0.5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let v = spec.sample(&mut rng, 3);
            assert!(v.iter().all(|x| x.abs() <= 0.5));
        }
        assert_eq!(spec.certificate_level(), 0.5);
    }

    #[test]
    fn zero_noise_is_exact() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert_eq!(NoiseSpec::zero().sample(&mut rng, 2), Vector::zeros(2));
        assert_eq!(NoiseSpec::new(0.0, 1.0).unwrap().bound(), 0.0);
    }

    #[test]
    fn level_uses_smaller_of_clip_and_twice_std() {
        let spec = NoiseSpec::new(0.01, 1.0).unwrap();
        assert_eq!(spec.certificate_level(), 0.02);
        assert_eq!(spec.bound(), 1.0);
    }
}
