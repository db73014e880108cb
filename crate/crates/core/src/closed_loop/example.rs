//! One-dimensional instability scenario: a perception map that is wrong at a
//! single point drives an unstable plant out of the region forever.

use alloc::vec;
use alloc::vec::Vec;

use super::controller::StaticGainTracker;
use super::reference::ReferenceSignal;
use super::rollout::{rollout, ExactPerception, Perception, RolloutSpec, Trajectory};
use crate::error::{Error, Result};
use crate::lin_sys::LinearSystem;
use crate::linalg::{Mat, Vector};
use crate::perception::IdentityMap;

/// `ĥ(x) = 0` when `|x| ≥ r − tol` or `|x − x̄| ≤ tol`, and `x` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlawedPerception {
    pub region: f64,
    pub x_bar: f64,
    pub tol: f64,
}

impl Perception for FlawedPerception {
    fn perceive(&self, z: &Vector, _truth: &Vector) -> Vector {
        let x = z[0];
        if x.abs() >= self.region - self.tol || (x - self.x_bar).abs() <= self.tol {
            Vector::zeros(1)
        } else {
            z.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstabilityExample {
    pub a: f64,
    pub region: f64,
    pub x_bar: f64,
    pub kx: f64,
    pub kr: f64,
    pub tol: f64,
}

impl Default for InstabilityExample {
    fn default() -> Self {
        Self {
            a: 1.2,
            region: 1.0,
            x_bar: 0.5,
            kx: -0.9,
            kr: 0.7,
            tol: 1e-9,
        }
    }
}

impl InstabilityExample {
    pub fn system(&self) -> Result<LinearSystem> {
        LinearSystem::scalar(self.a, 1.0, 1.0)
    }

    pub fn controller(&self) -> StaticGainTracker {
        StaticGainTracker {
            kx: Mat::from_element(1, 1, self.kx),
            kr: Mat::from_element(1, 1, self.kr),
        }
    }

    pub fn perception(&self) -> FlawedPerception {
        FlawedPerception {
            region: self.region,
            x_bar: self.x_bar,
            tol: self.tol,
        }
    }

    /// `x_ref_0 = x̄/K^r` steers the origin to `x̄`, where perception reads
    /// zero; `x_ref_1 = (r − a x̄)/K^r` then lands on the boundary; zero after.
    pub fn reference(&self, len: usize) -> Result<ReferenceSignal> {
        if self.kr == 0.0 {
            return Err(Error::InvalidInput("reference gain must be nonzero".into()));
        }
        let mut values: Vec<Vector> = vec![
            Vector::from_element(1, self.x_bar / self.kr),
            Vector::from_element(1, (self.region - self.a * self.x_bar) / self.kr),
        ];
        values.resize(len.max(3), Vector::zeros(1));
        ReferenceSignal::unrestricted(values)
    }

    fn run(&self, perception: &dyn Perception, steps: usize) -> Result<Trajectory> {
        let sys = self.system()?;
        let map = IdentityMap::new(1, f64::INFINITY);
        let spec = RolloutSpec::new(steps, self.region, 0);
        rollout(&sys, &map, perception, &mut self.controller(), &self.reference(steps + 1)?, &spec)
    }

    /// Flawed perception in the loop.
    pub fn flawed(&self, steps: usize) -> Result<Trajectory> {
        self.run(&self.perception(), steps)
    }

    /// Same scenario with `ĥ = h`.
    pub fn flawless(&self, steps: usize) -> Result<Trajectory> {
        self.run(&ExactPerception, steps)
    }
}

/// `|x_k| / |x_{k−1}|` for `k ≥ 1`, `NaN` where the previous state is zero.
pub fn growth_ratios(tr: &Trajectory) -> Vec<f64> {
    tr.states
        .windows(2)
        .map(|w| if w[0][0] == 0.0 { f64::NAN } else { (w[1][0] / w[0][0]).abs() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flawed_loop_grows_at_the_open_loop_rate() {
        let ex = InstabilityExample::default();
        let tr = ex.flawed(200).unwrap();
        assert_eq!(tr.states[1][0], ex.x_bar);
        assert!((tr.states[2][0] - ex.region).abs() < 1e-15);
        assert_eq!(tr.escape_time, Some(3));
        let ratios = growth_ratios(&tr);
        for k in 5..tr.len() {
            assert!((ratios[k - 1] - ex.a).abs() < 1e-6, "k={k}");
        }
        // |x_k| = a^{k−2} r from the boundary hit onward.
        for k in 2..tr.len() {
            let expect = ex.a.powi(k as i32 - 2) * ex.region;
            assert!((tr.states[k][0] - expect).abs() <= 1e-9 * expect);
        }
        assert!(tr.aborted_at.is_some());
    }

    #[test]
    fn flawless_twin_stays_bounded() {
        let ex = InstabilityExample::default();
        let tr = ex.flawless(200).unwrap();
        assert_eq!(tr.len(), 201);
        assert!(tr.states.iter().all(|x| x[0].abs() <= 10.0 * ex.region));
    }
}
