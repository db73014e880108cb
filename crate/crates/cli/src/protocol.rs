//! Experiment building blocks shared by the subcommands.

use std::f64::consts::PI;
use std::sync::Arc;

use anyhow::{Context, Result};
use certeq_core::closed_loop::{ExactPerception, Perception, ReferenceSignal};
use certeq_core::lin_sys::closed_loop_responses;
use certeq_core::linalg::{self, Vector};
use certeq_core::perception::{Dataset, KrrRegressor, NwRegressor};
use certeq_core::sampling::{collect_dataset, collect_trajectory_dataset, SamplingPlan};
use certeq_core::synthesis::{build_tracking_augmentation, r_max_of_responses, sls_synthesize, SynthesizedController};

use crate::scenario::{PredictorKind, SamplingSpec, Scenario};

/// Circle protocol used for training:
/// `[a_k sin(2πk/100), a_k cos(2πk/100)]` with
/// `a_k = 1.75 + 0.125 (⌊k/100⌋ mod 4)`.
pub fn training_reference(k: usize) -> Vector {
    let a = 1.75 + 0.125 * ((k / 100) % 4) as f64;
    let th = 2.0 * PI * k as f64 / 100.0;
    Vector::from_row_slice(&[a * th.sin(), a * th.cos()])
}

/// Evaluation ellipse `[a sin(2πk/P), b cos(2πk/P)]`.
pub fn ellipse_reference(a: f64, b: f64, period: f64, k: usize) -> Vector {
    let th = 2.0 * PI * k as f64 / period;
    Vector::from_row_slice(&[a * th.sin(), b * th.cos()])
}

/// State reference `C† y_ref` for the scenario's evaluation ellipse.
pub fn evaluation_reference(sc: &Scenario) -> Result<ReferenceSignal> {
    let sys = sc.system()?;
    let pinv = linalg::pinv(sys.c());
    let r = sc.reference;
    let values = (0..=r.steps)
        .map(|k| &pinv * ellipse_reference(r.a, r.b, r.period, k))
        .collect();
    Ok(ReferenceSignal::unrestricted(values)?)
}

/// Training data according to the scenario's sampling protocol.
pub fn collect(sc: &Scenario, seed: u64) -> Result<Dataset> {
    let sys = sc.system()?;
    let map = sc.map()?;
    let ctrl = sc.observer()?;
    let noise = sc.noise_spec()?;
    let data = match sc.sampling {
        SamplingSpec::Circle { steps } => {
            collect_trajectory_dataset(&sys, map.as_ref(), &ctrl, training_reference, steps, &noise, seed)?
        }
        SamplingSpec::Dense { r_bar, t } => {
            let phi_xu = closed_loop_responses(&sys, &ctrl, sys.n().max(10))?.phi_xu;
            let plan = SamplingPlan::new(r_bar, t, sc.noise().sigma_0, noise, seed)?;
            collect_dataset(&sys, map.as_ref(), &ctrl, &phi_xu, &plan)?
        }
    };
    Ok(data)
}

/// Perception used in closed loop.
pub fn build_perception(sc: &Scenario, kind: PredictorKind, data: Option<Arc<Dataset>>) -> Result<Arc<dyn Perception>> {
    Ok(match kind {
        PredictorKind::True => Arc::new(ExactPerception),
        PredictorKind::Nw => {
            let data = data.context("the nw predictor needs collected data")?;
            Arc::new(NwRegressor::new(data, sc.map()?, sc.predictor.kernel.kernel(), sc.predictor.gamma)?)
        }
        PredictorKind::Krr => {
            let data = data.context("the krr predictor needs collected data")?;
            Arc::new(KrrRegressor::fit(&data, sc.predictor.alpha, sc.predictor.lambda)?)
        }
    })
}

/// Tracking synthesis with `Q = CᵀC`-style weights from the scenario.
pub fn synthesize(sc: &Scenario) -> Result<SynthesizedController> {
    let sys = sc.system()?;
    let w = sc.lqg_weights()?;
    let s = sc.synthesis;
    let aug = build_tracking_augmentation(&sys, &w.q, &w.r, s.sigma_w, s.delta, s.eps)?;
    Ok(sls_synthesize(&aug, &w.q, &w.r, s.horizon, s.eps)?)
}

pub fn r_max(sc: &Scenario, ctrl: &SynthesizedController) -> Result<f64> {
    let s = sc.synthesis;
    Ok(r_max_of_responses(ctrl, s.r_max_ref, s.delta, s.sigma_w)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_reference_values() {
        assert_eq!(training_reference(0), Vector::from_row_slice(&[0.0, 1.75]));
        let q = training_reference(25);
        assert!((q[0] - 1.75).abs() < 1e-12 && q[1].abs() < 1e-12);
        let h = training_reference(100);
        assert!(h[0].abs() < 1e-12 && (h[1] - 1.875).abs() < 1e-12);
        // Radius cycles with period 400.
        assert!((training_reference(450) - training_reference(50)).amax() < 1e-12);
    }
}
