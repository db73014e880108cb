//! Feedback laws driven by a perception output and a state reference.

use crate::lin_sys::{LinearSystem, StaticOutputController};
use crate::linalg::{Mat, Vector};
use crate::synthesis::{Realization, SynthesizedController};

pub trait TrackingController: Send {
    /// Input at the current step from the measurement `y` (usually `ĥ(z)`)
    /// and the state reference.
    fn step(&mut self, y: &Vector, x_ref: &Vector) -> Vector;
    fn reset(&mut self);
}

/// One certainty-equivalent step: the perception output is used as if it
/// were the true measurement.
pub fn ce_step(ctrl: &mut dyn TrackingController, h_z: &Vector, x_ref: &Vector) -> Vector {
    ctrl.step(h_z, x_ref)
}

/// `u = K(x̂ − x_ref)` with the predictor-form observer updated by `y` after
/// the input is chosen.
#[derive(Debug, Clone)]
pub struct ObserverTracker {
    sys: LinearSystem,
    ctrl: StaticOutputController,
}

impl ObserverTracker {
    pub fn new(sys: &LinearSystem, ctrl: &StaticOutputController) -> Self {
        let mut ctrl = ctrl.clone();
        ctrl.reset();
        Self { sys: sys.clone(), ctrl }
    }

    pub fn estimate(&self) -> &Vector {
        self.ctrl.estimate()
    }
}

impl TrackingController for ObserverTracker {
    fn step(&mut self, y: &Vector, x_ref: &Vector) -> Vector {
        let u_ref = -(self.ctrl.k() * x_ref);
        let u = self.ctrl.control(&u_ref);
        self.ctrl.observe(&self.sys, &u, y);
        u
    }

    fn reset(&mut self) {
        self.ctrl.reset();
    }
}

/// Synthesized law acting on the error measurement `y − C x_ref`.
#[derive(Debug, Clone)]
pub struct SlsTracker {
    c: Mat,
    real: Realization,
}

impl SlsTracker {
    pub fn new(ctrl: &SynthesizedController) -> Self {
        Self {
            c: ctrl.system().c().clone(),
            real: ctrl.realize(),
        }
    }
}

impl TrackingController for SlsTracker {
    fn step(&mut self, y: &Vector, x_ref: &Vector) -> Vector {
        let err = y - &self.c * x_ref;
        self.real.step(&err)
    }

    fn reset(&mut self) {
        self.real.reset();
    }
}

/// `u = K^x y + K^r x_ref`, memoryless.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticGainTracker {
    pub kx: Mat,
    pub kr: Mat,
}

impl TrackingController for StaticGainTracker {
    fn step(&mut self, y: &Vector, x_ref: &Vector) -> Vector {
        &self.kx * y + &self.kr * x_ref
    }

    fn reset(&mut self) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lin_sys::LqgWeights;

    #[test]
    fn zero_inputs_give_zero_action() {
        let sys = LinearSystem::hovercraft();
        let lqg = StaticOutputController::lqg(&sys, &LqgWeights::standard(&sys)).unwrap();
        let mut t = ObserverTracker::new(&sys, &lqg);
        for _ in 0..5 {
            assert_eq!(ce_step(&mut t, &Vector::zeros(2), &Vector::zeros(4)), Vector::zeros(2));
        }
    }

    #[test]
    fn observer_tracker_matches_training_law() {
        // u = K x̂ + u_ref with u_ref = −K C†y_ref, as used during collection.
        let sys = LinearSystem::hovercraft();
        let lqg = StaticOutputController::lqg(&sys, &LqgWeights::standard(&sys)).unwrap();
        let mut t = ObserverTracker::new(&sys, &lqg);
        let mut c = lqg.clone();
        let y_ref = Vector::from_row_slice(&[0.3, -1.2]);
        let x_ref = crate::linalg::pinv(sys.c()) * &y_ref;
        for k in 0..6 {
            let y = Vector::from_row_slice(&[0.1 * k as f64, 0.05]);
            let u1 = t.step(&y, &x_ref);
            let u2 = c.control(&-(c.k() * &x_ref));
            c.observe(&sys, &u2, &y);
            assert_eq!(u1, u2);
        }
    }

    #[test]
    fn static_gains_are_linear_in_the_measurement() {
        let mut t = StaticGainTracker {
            kx: Mat::from_element(1, 1, -0.9),
            kr: Mat::from_element(1, 1, 0.7),
        };
        let r = Vector::from_element(1, 0.4);
        let base = t.step(&Vector::from_element(1, 0.2), &r);
        let nu = Vector::from_element(1, 0.05);
        let moved = t.step(&(Vector::from_element(1, 0.2) + &nu), &r);
        assert!(((moved - base) - &t.kx * nu).amax() < 1e-15);
    }
}
