use std::time::Instant;

use certeq_core::lin_sys::LinearSystem;
use certeq_core::linalg::Mat;
use certeq_core::synthesis::{build_tracking_augmentation, sls_residual_dense, sls_synthesize};

#[test]
fn hovercraft_tracking_synthesis_at_default_horizon() {
    let sys = LinearSystem::hovercraft();
    let q = sys.c().transpose() * sys.c();
    let r = Mat::identity(2, 2);
    let aug = build_tracking_augmentation(&sys, &q, &r, 0.05, 0.13, 0.01).unwrap();
    let t0 = Instant::now();
    let ctrl = sls_synthesize(&aug, &q, &r, 40, 0.01).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    eprintln!("objective {} gap {:e} residual {:e} iters {} in {secs:.2}s", ctrl.objective, ctrl.duality_gap, ctrl.residual, ctrl.lp_iterations);
    assert!(ctrl.residual <= 1e-7);
    assert!(sls_residual_dense(&sys, &ctrl.responses) <= 1e-7);
    assert!(ctrl.duality_gap <= 1e-8);
    assert!(secs < 60.0);
}
