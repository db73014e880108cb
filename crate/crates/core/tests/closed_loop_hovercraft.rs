use std::sync::{Arc, OnceLock};

use certeq_core::closed_loop::{
    paired_rollout, random_admissible_reference, rollout, suboptimality_bound, tracking_cost, ExactPerception,
    RolloutSpec, SlsTracker,
};
use certeq_core::lin_sys::{closed_loop_responses, LinearSystem, LqgWeights, StaticOutputController};
use certeq_core::linalg::{self, Mat, Vector};
use certeq_core::perception::{Kernel, NoiseSpec, NwRegressor, ObservationMap, SinusoidalLift};
use certeq_core::sampling::{collect_dataset, SamplingPlan};
use certeq_core::synthesis::{build_tracking_augmentation, r_max_of_responses, sls_synthesize, SynthesizedController};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const SIGMA_W: f64 = 0.05;
const DELTA: f64 = 0.13;
const R_REF: f64 = 1.0;

fn synthesized() -> &'static SynthesizedController {
    static CTRL: OnceLock<SynthesizedController> = OnceLock::new();
    CTRL.get_or_init(|| {
        let sys = LinearSystem::hovercraft();
        let q = sys.c().transpose() * sys.c();
        let r = Mat::identity(2, 2);
        let aug = build_tracking_augmentation(&sys, &q, &r, SIGMA_W, DELTA, 0.01).unwrap();
        sls_synthesize(&aug, &q, &r, 40, 0.01).unwrap()
    })
}

fn r_max() -> f64 {
    r_max_of_responses(synthesized(), R_REF, DELTA, SIGMA_W).unwrap()
}

#[test]
fn realized_controller_reproduces_every_impulse_response() {
    let ctrl = synthesized();
    let sys = ctrl.system();
    let resp = &ctrl.responses;
    let h = ctrl.horizon();
    let (n, p) = (sys.n(), sys.p());
    let mut worst = 0.0_f64;
    for channel in 0..n + p {
        let mut real = ctrl.realize();
        let mut x = Vector::zeros(n);
        for k in 0..=h + 3 {
            let mut y = sys.c() * &x;
            let mut w = Vector::zeros(n);
            if k == 0 {
                if channel < n {
                    w[channel] = 1.0;
                } else {
                    y[channel - n] += 1.0;
                }
            }
            let u = real.step(&y);
            // Response at lag k to an impulse at time 0.
            let (ex, eu) = if channel < n {
                let ex = resp.phi_xw.tap(k).map(|t| t.column(channel).into_owned()).unwrap_or(Vector::zeros(n));
                let eu = resp.phi_uw.tap(k).map(|t| t.column(channel).into_owned()).unwrap_or(Vector::zeros(sys.m()));
                (ex, eu)
            } else {
                let j = channel - n;
                let ex = resp.phi_xn.tap(k).map(|t| t.column(j).into_owned()).unwrap_or(Vector::zeros(n));
                let eu = resp.phi_un.tap(k).map(|t| t.column(j).into_owned()).unwrap_or(Vector::zeros(sys.m()));
                (ex, eu)
            };
            worst = worst.max((&x - ex).amax()).max((&u - eu).amax());
            x = sys.a() * &x + sys.b() * &u + w;
        }
    }
    assert!(worst <= 1e-6, "worst tap mismatch {worst:e}");
}

#[test]
fn exact_perception_stays_within_r_max() {
    let ctrl = synthesized();
    let sys = ctrl.system().clone();
    let bound = r_max();
    let map = SinusoidalLift::new(2, 5, 2.0 * bound, 3).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for i in 0..100 {
        let reference = random_admissible_reference(&mut rng, &ctrl.embedding, 400, R_REF, DELTA).unwrap();
        let spec = RolloutSpec::new(400, bound, i).with_disturbance(SIGMA_W);
        let tr = rollout(&sys, &map, &ExactPerception, &mut SlsTracker::new(ctrl), &reference, &spec).unwrap();
        assert!(!tr.escaped(), "run {i} left ‖Cx‖ ≤ {bound}");
        for x in &tr.states {
            worst = worst.max(linalg::vec_inf_norm(&(sys.c() * x)));
        }
    }
    assert!(worst <= bound);
}

#[test]
fn certainty_equivalent_gap_respects_the_noise_gain() {
    let ctrl = synthesized();
    let sys = ctrl.system().clone();
    let bound = r_max();
    let region = 2.0 * bound;
    let map: Arc<dyn ObservationMap> = Arc::new(SinusoidalLift::new(2, 5, 2.0 * region, 5).unwrap());

    let lqg = StaticOutputController::lqg(&sys, &LqgWeights::standard(&sys)).unwrap();
    let phi_xu = closed_loop_responses(&sys, &lqg, 10).unwrap().phi_xu;
    let noise = NoiseSpec::new(0.01, 1.0).unwrap();
    let plan = SamplingPlan::new(2.0 * bound, 2000, 0.0, noise, 77).unwrap();
    let data = collect_dataset(&sys, map.as_ref(), &lqg, &phi_xu, &plan).unwrap();
    let nw = NwRegressor::new(Arc::new(data), map.clone(), Kernel::triangular(), 0.15).unwrap();

    let gain = ctrl.noise_cost_gain();
    let tracker = SlsTracker::new(ctrl);
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let mut certified = 0;
    for i in 0..100 {
        let reference = random_admissible_reference(&mut rng, &ctrl.embedding, 400, R_REF, DELTA).unwrap();
        let spec = RolloutSpec::new(400, region, 1000 + i).with_disturbance(SIGMA_W);
        let (ce, star) = paired_rollout(&sys, map.as_ref(), &nw, &tracker, &reference, &spec).unwrap();
        if ce.escaped() {
            continue;
        }
        let eps_h = ce.max_perception_error();
        let gap = tracking_cost(&ce, &ctrl.q_sqrt, &ctrl.r_sqrt) - tracking_cost(&star, &ctrl.q_sqrt, &ctrl.r_sqrt);
        assert!(gap <= eps_h * gain + 1e-12, "run {i}: gap {gap} > {eps_h} × {gain}");
        if let Ok(b) = suboptimality_bound(eps_h, ctrl, region, bound) {
            assert!(gap <= b + 1e-12);
            certified += 1;
        }
    }
    eprintln!("certified runs: {certified}");
}
