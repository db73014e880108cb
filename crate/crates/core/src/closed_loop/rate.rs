//! Suboptimality certificates and the end-to-end rate study.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::controller::SlsTracker;
use super::reference::ReferenceSignal;
use super::rollout::{paired_rollout, tracking_cost, Perception, RolloutSpec};
use crate::error::{Error, Result};
use crate::lin_sys::{FirOperator, LinearSystem, StaticOutputController};
use crate::linalg::{self, Vector};
use crate::math;
use crate::perception::{optimal_bandwidth, suboptimality_rate_bound, Kernel, NoiseSpec, NwRegressor, ObservationMap};
use crate::sampling::{collect_dataset, SamplingPlan};
use crate::synthesis::SynthesizedController;

/// `ε_h ‖[Q^{1/2}Φ_xn; R^{1/2}Φ_un]‖_L1`, available only when
/// `ε_h ≤ (r − r_max(Φ)) / ‖CΦ_xn‖_L1` so the loop provably stays in the
/// region where the perception error is controlled.
pub fn suboptimality_bound(eps_h: f64, ctrl: &SynthesizedController, region: f64, r_max: f64) -> Result<f64> {
    if !(eps_h >= 0.0) {
        return Err(Error::InvalidInput("perception error level must be nonnegative".into()));
    }
    let gain = ctrl.output_noise_gain();
    let margin = region - r_max;
    if margin < 0.0 || eps_h * gain > margin {
        return Err(Error::CertificateUnavailable(format!(
            "ε_h = {eps_h} exceeds (r − r_max)/‖CΦ_xn‖ = ({region} − {r_max})/{gain}"
        )));
    }
    Ok(eps_h * ctrl.noise_cost_gain())
}

/// Points of the tensor grid with `side` points per axis over `[−r, r]^p`.
pub fn grid_points(p: usize, side: usize, radius: f64) -> Vec<Vector> {
    let side = side.max(1);
    let coord = |i: usize| {
        if side == 1 {
            0.0
        } else {
            -radius + 2.0 * radius * i as f64 / (side - 1) as f64
        }
    };
    let total = side.pow(p as u32);
    (0..total)
        .map(|mut idx| {
            let mut y = Vector::zeros(p);
            for j in 0..p {
                y[j] = coord(idx % side);
                idx /= side;
            }
            y
        })
        .collect()
}

/// `max ‖ĥ(g(y)) − y‖_∞` over the given measurement points.
pub fn max_grid_error(perception: &dyn Perception, map: &dyn ObservationMap, grid: &[Vector]) -> f64 {
    grid.iter()
        .map(|y| linalg::vec_inf_norm(&(perception.perceive(&map.forward(y), y) - y)))
        .fold(0.0, f64::max)
}

/// Paired closed-loop evaluation attached to a rate study.
#[derive(Debug, Clone)]
pub struct ClosedLoopCheck {
    pub ctrl: SynthesizedController,
    pub reference: ReferenceSignal,
    pub spec: RolloutSpec,
}

/// Configuration of the rate study: dense sampling with `r̄ = 2 r_max`,
/// Nadaraya-Watson with the balancing bandwidth, and the error measured on a
/// fixed grid over `[−grid_radius, grid_radius]^p`.
#[derive(Debug, Clone)]
pub struct RateStudy {
    pub sys: LinearSystem,
    pub collector: StaticOutputController,
    pub phi_xu: FirOperator,
    pub map: Arc<dyn ObservationMap>,
    pub kernel: Kernel,
    pub noise: NoiseSpec,
    pub sigma_0: f64,
    pub r_max: f64,
    pub grid_side: usize,
    pub grid_radius: f64,
    pub delta: f64,
    pub closed_loop: Option<ClosedLoopCheck>,
}

impl RateStudy {
    pub fn r_bar(&self) -> f64 {
        2.0 * self.r_max
    }

    /// `r = r̄/√2`, the radius on which the uniform bound is stated.
    pub fn region(&self) -> f64 {
        self.r_bar() / core::f64::consts::SQRT_2
    }

    /// Cor.-5-style perception error level
    /// `4 L_g L_h r_max (4p²σ⁴/T)^{1/(p+4)} √log(T²/δ)`.
    pub fn error_bound(&self, t: usize) -> f64 {
        suboptimality_rate_bound(
            t,
            self.r_max,
            self.map.lipschitz_g(),
            self.map.lipschitz_h(),
            self.noise.certificate_level(),
            self.map.p(),
            1.0,
            self.delta,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub t: usize,
    pub gamma: f64,
    pub eps_emp: f64,
    pub eps_bound: f64,
    /// `c(π̂) − c(π*)` on the paired rollout, when a closed-loop check is set.
    pub subopt_emp: Option<f64>,
    pub subopt_bound: Option<f64>,
    /// Largest perception error seen along the certainty-equivalent run.
    pub rollout_eps: Option<f64>,
    pub escaped: bool,
}

/// One row of the study for dataset size `t` and a collection seed.
pub fn rate_row(study: &RateStudy, t: usize, seed: u64) -> Result<RateRow> {
    let p = study.map.p();
    let plan = SamplingPlan::new(study.r_bar(), t, study.sigma_0, study.noise, seed)?;
    let data = collect_dataset(&study.sys, study.map.as_ref(), &study.collector, &study.phi_xu, &plan)?;
    let gamma = optimal_bandwidth(
        t,
        study.r_max,
        study.map.lipschitz_g(),
        study.map.lipschitz_h(),
        study.noise.certificate_level(),
        p,
        study.kernel.v_ker(p),
    )
    .value;
    let nw = NwRegressor::new(Arc::new(data), study.map.clone(), study.kernel, gamma)?;
    let grid = grid_points(p, study.grid_side, study.grid_radius);
    let eps_emp = max_grid_error(&nw, study.map.as_ref(), &grid);
    let eps_bound = study.error_bound(t);

    let mut row = RateRow {
        t,
        gamma,
        eps_emp,
        eps_bound,
        subopt_emp: None,
        subopt_bound: None,
        rollout_eps: None,
        escaped: false,
    };
    if let Some(check) = &study.closed_loop {
        let tracker = SlsTracker::new(&check.ctrl);
        let mut spec = check.spec.clone();
        spec.seed ^= seed;
        let (ce, star) = paired_rollout(&study.sys, study.map.as_ref(), &nw, &tracker, &check.reference, &spec)?;
        let (qs, rs) = (&check.ctrl.q_sqrt, &check.ctrl.r_sqrt);
        row.subopt_emp = Some(tracking_cost(&ce, qs, rs) - tracking_cost(&star, qs, rs));
        row.subopt_bound = Some(eps_bound * check.ctrl.noise_cost_gain());
        row.rollout_eps = Some(ce.max_perception_error());
        row.escaped = ce.escaped() || ce.aborted_at.is_some();
    }
    Ok(row)
}

/// Rows for an increasing list of dataset sizes, all with the same seed.
pub fn end_to_end_rate(study: &RateStudy, t_list: &[usize], seed: u64) -> Result<Vec<RateRow>> {
    if t_list.is_empty() || t_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("dataset sizes must be strictly increasing".into()));
    }
    t_list.iter().map(|&t| rate_row(study, t, seed)).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| math::ln(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| math::ln(*v)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_corners() {
        let g = grid_points(2, 3, 1.5);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], Vector::from_row_slice(&[-1.5, -1.5]));
        assert_eq!(g[8], Vector::from_row_slice(&[1.5, 1.5]));
        assert_eq!(g[4], Vector::zeros(2));
    }

    fn scalar_controller() -> SynthesizedController {
        use crate::linalg::Mat;
        use crate::synthesis::{build_tracking_augmentation, sls_synthesize};
        let sys = LinearSystem::scalar(0.5, 1.0, 1.0).unwrap();
        let one = Mat::identity(1, 1);
        let aug = build_tracking_augmentation(&sys, &one, &one, 1.0, 0.0, 0.0)
            .unwrap()
            .without_reference();
        sls_synthesize(&aug, &one, &one, 20, 0.1).unwrap()
    }

    #[test]
    fn subopt_bound_is_linear_and_gated() {
        let ctrl = scalar_controller();
        assert_eq!(suboptimality_bound(0.0, &ctrl, 2.0, 1.0).unwrap(), 0.0);
        let b1 = suboptimality_bound(0.05, &ctrl, 2.0, 1.0).unwrap();
        let b2 = suboptimality_bound(0.1, &ctrl, 2.0, 1.0).unwrap();
        assert!((b2 - 2.0 * b1).abs() <= 1e-15 * b2);
        assert!((b1 - 0.05 * ctrl.noise_cost_gain()).abs() < 1e-15);
        let limit = 1.0 / ctrl.output_noise_gain();
        assert!(suboptimality_bound(0.999 * limit, &ctrl, 2.0, 1.0).is_ok());
        assert!(matches!(
            suboptimality_bound(1.001 * limit, &ctrl, 2.0, 1.0),
            Err(Error::CertificateUnavailable(_))
        ));
    }

    #[test]
    fn error_bound_scales_as_the_rate() {
        // ε_bound(T) T^{1/(p+4)} / √log(T²/δ) is constant for p = 2.
        let sys = LinearSystem::hovercraft();
        let lqg = StaticOutputController::lqg(&sys, &crate::lin_sys::LqgWeights::standard(&sys)).unwrap();
        let phi_xu = crate::lin_sys::closed_loop_responses(&sys, &lqg, 10).unwrap().phi_xu;
        let study = RateStudy {
            sys,
            collector: lqg,
            phi_xu,
            map: Arc::new(crate::perception::IdentityMap::new(2, 3.0)),
            kernel: Kernel::triangular(),
            noise: NoiseSpec::new(0.5, 10.0).unwrap(),
            sigma_0: 0.0,
            r_max: 1.25,
            grid_side: 5,
            grid_radius: 2.5,
            delta: 0.1,
            closed_loop: None,
        };
        let norm = |t: usize| {
            let tf = t as f64;
            study.error_bound(t) * tf.powf(1.0 / 6.0) / (tf * tf / 0.1).ln().sqrt()
        };
        for t in [500, 1000, 2000, 4000, 8000] {
            assert!((norm(t) / norm(500) - 1.0).abs() < 1e-12);
        }
        assert!(end_to_end_rate(&study, &[1000, 500], 0).is_err());
    }

    #[test]
    fn slope_of_a_power_law() {
        let x = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.25)).collect();
        assert!((log_log_slope(&x, &y) + 0.25).abs() < 1e-12);
    }
}
