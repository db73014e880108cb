//! Certainty-equivalent simulation of the plant with a perception map in the
//! loop.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Debug;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::controller::{ce_step, TrackingController};
use super::reference::ReferenceSignal;
use crate::error::{check_dim, Error, Result};
use crate::lin_sys::LinearSystem;
use crate::linalg::{self, Mat, Vector};
use crate::perception::{uniform_box, KrrRegressor, NwRegressor, ObservationMap};
use crate::sampling::DEFAULT_GUARD;

/// Estimate of the measurement from an observation. `truth` is `Cx` and is
/// only consulted by oracle perceptions.
pub trait Perception: Send + Sync {
    fn perceive(&self, z: &Vector, truth: &Vector) -> Vector;
}

impl Perception for NwRegressor {
    fn perceive(&self, z: &Vector, _truth: &Vector) -> Vector {
        self.predict(z).0
    }
}

impl Perception for KrrRegressor {
    fn perceive(&self, z: &Vector, _truth: &Vector) -> Vector {
        self.predict(z)
    }
}

/// The true measurement; used for the reference policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactPerception;

impl Perception for ExactPerception {
    fn perceive(&self, _z: &Vector, truth: &Vector) -> Vector {
        truth.clone()
    }
}

/// The analytic inverse of the observation map.
#[derive(Debug, Clone)]
pub struct MapInverse(pub Arc<dyn ObservationMap>);

impl Perception for MapInverse {
    fn perceive(&self, z: &Vector, _truth: &Vector) -> Vector {
        self.0.inverse(z)
    }
}

impl<F> Perception for F
where
    F: Fn(&Vector) -> Vector + Send + Sync,
{
    fn perceive(&self, z: &Vector, _truth: &Vector) -> Vector {
        self(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSpec {
    /// Number of simulated steps `T`; signals are recorded for `k = 0..=T`.
    pub steps: usize,
    /// Radius `r` of the region `{‖Cx‖_∞ ≤ r}`.
    pub region: f64,
    /// Divergence guard on `‖x‖_∞`.
    pub guard: f64,
    /// Initial state drawn uniformly from this box (zero means rest).
    pub x0_radius: f64,
    /// Process disturbance drawn uniformly from this box each step.
    pub w_radius: f64,
    pub seed: u64,
}

impl RolloutSpec {
    pub fn new(steps: usize, region: f64, seed: u64) -> Self {
        Self {
            steps,
            region,
            guard: DEFAULT_GUARD,
            x0_radius: 0.0,
            w_radius: 0.0,
            seed,
        }
    }

    pub fn with_disturbance(mut self, w_radius: f64) -> Self {
        self.w_radius = w_radius;
        self
    }

    pub fn with_initial_state(mut self, x0_radius: f64) -> Self {
        self.x0_radius = x0_radius;
        self
    }
}

/// Recorded closed-loop signals. All vectors have the same length; when the
/// run is aborted they hold the prefix up to the last finite state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
    pub observations: Vec<Vector>,
    pub perceptions: Vec<Vector>,
    pub references: Vec<Vector>,
    /// `‖ĥ(z_k) − Cx_k‖_∞`.
    pub perception_errors: Vec<f64>,
    pub region: f64,
    /// First `k` with `‖Cx_k‖_∞ > r`.
    pub escape_time: Option<usize>,
    /// Step at which the state left the guard or became non-finite.
    pub aborted_at: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn escaped(&self) -> bool {
        self.escape_time.is_some()
    }

    pub fn max_perception_error(&self) -> f64 {
        self.perception_errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Iterates `x_{k+1} = Ax_k + Bu_k + w_k` with `u_k` from the certainty-
/// equivalent step on `ĥ(g(Cx_k))`. The run continues after leaving the
/// region and stops only at the guard.
pub fn rollout(
    sys: &LinearSystem,
    map: &dyn ObservationMap,
    perception: &dyn Perception,
    ctrl: &mut dyn TrackingController,
    reference: &ReferenceSignal,
    spec: &RolloutSpec,
) -> Result<Trajectory> {
    if spec.steps == 0 {
        return Err(Error::InvalidInput("rollout needs at least one step".into()));
    }
    check_dim("reference", sys.n(), reference.at(0).len())?;
    check_dim("observation map", sys.p(), map.p())?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut x = uniform_box(&mut rng, sys.n(), spec.x0_radius);
    ctrl.reset();

    let cap = spec.steps + 1;
    let mut tr = Trajectory {
        states: Vec::with_capacity(cap),
        inputs: Vec::with_capacity(cap),
        observations: Vec::with_capacity(cap),
        perceptions: Vec::with_capacity(cap),
        references: Vec::with_capacity(cap),
        perception_errors: Vec::with_capacity(cap),
        region: spec.region,
        escape_time: None,
        aborted_at: None,
    };
    for k in 0..=spec.steps {
        let y = sys.c() * &x;
        if tr.escape_time.is_none() && linalg::vec_inf_norm(&y) > spec.region {
            tr.escape_time = Some(k);
        }
        let z = map.forward(&y);
        let h_z = perception.perceive(&z, &y);
        let x_ref = reference.at(k).clone();
        let u = ce_step(ctrl, &h_z, &x_ref);
        tr.perception_errors.push(linalg::vec_inf_norm(&(&h_z - &y)));
        let w = uniform_box(&mut rng, sys.n(), spec.w_radius);
        let next = sys.a() * &x + sys.b() * &u + w;
        tr.states.push(x);
        tr.inputs.push(u);
        tr.observations.push(z);
        tr.perceptions.push(h_z);
        tr.references.push(x_ref);
        if k == spec.steps {
            break;
        }
        let norm = linalg::vec_inf_norm(&next);
        if !(norm <= spec.guard) {
            tr.aborted_at = Some(k + 1);
            if tr.escape_time.is_none() && !(linalg::vec_inf_norm(&(sys.c() * &next)) <= spec.region) {
                tr.escape_time = Some(k + 1);
            }
            break;
        }
        x = next;
    }
    Ok(tr)
}

/// Runs the certainty-equivalent loop and the reference policy on the same
/// seed; the second trajectory uses the true measurement.
pub fn paired_rollout<C>(
    sys: &LinearSystem,
    map: &dyn ObservationMap,
    perception: &dyn Perception,
    ctrl: &C,
    reference: &ReferenceSignal,
    spec: &RolloutSpec,
) -> Result<(Trajectory, Trajectory)>
where
    C: TrackingController + Clone,
{
    let ce = rollout(sys, map, perception, &mut ctrl.clone(), reference, spec)?;
    let star = rollout(sys, map, &ExactPerception, &mut ctrl.clone(), reference, spec)?;
    Ok((ce, star))
}

/// Finite-horizon cost `max_k ‖[Q^{1/2}(x_k − x_ref_k); R^{1/2}u_k]‖_∞`,
/// given the weight square roots.
pub fn tracking_cost(traj: &Trajectory, q_sqrt: &Mat, r_sqrt: &Mat) -> f64 {
    traj.states
        .iter()
        .zip(&traj.references)
        .zip(&traj.inputs)
        .map(|((x, xr), u)| {
            let ex = linalg::vec_inf_norm(&(q_sqrt * (x - xr)));
            let eu = linalg::vec_inf_norm(&(r_sqrt * u));
            ex.max(eu)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::{ObserverTracker, StaticGainTracker};
    use crate::lin_sys::{LqgWeights, StaticOutputController};
    use crate::perception::{IdentityMap, SinusoidalLift};
    use proptest::prelude::*;

    fn hover_parts() -> (LinearSystem, ObserverTracker, Arc<dyn ObservationMap>) {
        let sys = LinearSystem::hovercraft();
        let lqg = StaticOutputController::lqg(&sys, &LqgWeights::standard(&sys)).unwrap();
        let map: Arc<dyn ObservationMap> = Arc::new(SinusoidalLift::new(2, 5, 2.5, 7).unwrap());
        (sys.clone(), ObserverTracker::new(&sys, &lqg), map)
    }

    #[test]
    fn perfect_perception_at_rest_stays_at_rest() {
        let (sys, mut ctrl, map) = hover_parts();
        let spec = RolloutSpec::new(100, 1.0, 1);
        let tr = rollout(&sys, map.as_ref(), &ExactPerception, &mut ctrl, &ReferenceSignal::zero(4, 1), &spec).unwrap();
        assert_eq!(tr.len(), 101);
        assert!(tr.states.iter().all(|x| x.amax() == 0.0));
        assert!(!tr.escaped());
    }

    #[test]
    fn lengths_agree_and_escape_is_first_exit() {
        let sys = LinearSystem::scalar(1.1, 1.0, 1.0).unwrap();
        let map = IdentityMap::new(1, 1e9);
        let mut ctrl = StaticGainTracker {
            kx: Mat::zeros(1, 1),
            kr: Mat::zeros(1, 1),
        };
        let spec = RolloutSpec::new(50, 2.0, 4).with_initial_state(1.0);
        let tr = rollout(&sys, &map, &ExactPerception, &mut ctrl, &ReferenceSignal::zero(1, 1), &spec).unwrap();
        for n in [tr.inputs.len(), tr.observations.len(), tr.perceptions.len(), tr.references.len(), tr.perception_errors.len()] {
            assert_eq!(n, tr.len());
        }
        let first = tr.states.iter().position(|x| x[0].abs() > 2.0);
        assert_eq!(first, tr.escape_time);
    }

    #[test]
    fn guard_aborts_with_prefix() {
        let sys = LinearSystem::scalar(3.0, 1.0, 1.0).unwrap();
        let map = IdentityMap::new(1, 1e9);
        let mut ctrl = StaticGainTracker {
            kx: Mat::zeros(1, 1),
            kr: Mat::zeros(1, 1),
        };
        let mut spec = RolloutSpec::new(500, 1.0, 0).with_initial_state(1.0);
        spec.guard = 1e3;
        let tr = rollout(&sys, &map, &ExactPerception, &mut ctrl, &ReferenceSignal::zero(1, 1), &spec).unwrap();
        let k = tr.aborted_at.unwrap();
        assert_eq!(tr.len(), k);
        assert!(tr.states.iter().all(|x| x[0].abs() <= 1e3));
    }

    #[test]
    fn paired_rollouts_with_true_measurement_are_identical() {
        let (sys, ctrl, map) = hover_parts();
        let reference = ReferenceSignal::unrestricted(
            (0..200).map(|k| Vector::from_row_slice(&[(k as f64 * 0.05).sin(), 0.0, 0.5, 0.0])).collect(),
        )
        .unwrap();
        let spec = RolloutSpec::new(200, 3.0, 11).with_disturbance(0.05).with_initial_state(0.1);
        let (a, b) = paired_rollout(&sys, map.as_ref(), &ExactPerception, &ctrl, &reference, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perturbed_measurement_moves_the_input_linearly() {
        // Two rollouts differing only by a constant offset ν in ĥ: the first
        // input differs by the direct gain applied to ν.
        let sys = LinearSystem::scalar(0.5, 1.0, 1.0).unwrap();
        let map = IdentityMap::new(1, 10.0);
        let ctrl = StaticGainTracker {
            kx: Mat::from_element(1, 1, -0.4),
            kr: Mat::from_element(1, 1, 0.2),
        };
        let reference = ReferenceSignal::unrestricted(alloc::vec![Vector::from_element(1, 0.3)]).unwrap();
        let spec = RolloutSpec::new(5, 10.0, 2).with_initial_state(1.0);
        let shifted = |z: &Vector| z + Vector::from_element(1, 0.01);
        let (a, b) = paired_rollout(&sys, &map, &shifted, &ctrl, &reference, &spec).unwrap();
        assert!((a.inputs[0][0] - b.inputs[0][0] - (-0.4 * 0.01)).abs() < 1e-15);
    }

    fn scalar_traj(dev: &[f64], u: &[f64]) -> Trajectory {
        let v = |s: &[f64]| s.iter().map(|x| Vector::from_element(1, *x)).collect::<Vec<_>>();
        let n = dev.len();
        Trajectory {
            states: v(dev),
            inputs: v(u),
            observations: v(dev),
            perceptions: v(dev),
            references: alloc::vec![Vector::zeros(1); n],
            perception_errors: alloc::vec![0.0; n],
            region: 1.0,
            escape_time: None,
            aborted_at: None,
        }
    }

    #[test]
    fn cost_examples() {
        let one = Mat::identity(1, 1);
        assert_eq!(tracking_cost(&scalar_traj(&[0.0; 4], &[0.0; 4]), &one, &one), 0.0);
        let tr = scalar_traj(&[0.0, 0.3, 0.0], &[0.1, -0.05, 0.0]);
        assert_eq!(tracking_cost(&tr, &one, &one), 0.3);
    }

    proptest! {
        #[test]
        fn cost_ignores_time_order(
            pairs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let one = Mat::identity(1, 1);
            let (d, u): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
            let (d2, u2): (Vec<f64>, Vec<f64>) = shuffled.into_iter().unzip();
            prop_assert_eq!(
                tracking_cost(&scalar_traj(&d, &u), &one, &one),
                tracking_cost(&scalar_traj(&d2, &u2), &one, &one)
            );
        }
    }
}
