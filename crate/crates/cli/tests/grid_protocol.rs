use std::path::Path;

use certeq::scenario::{load_scenario, PredictorKind};
use certeq::{run_scenario, Overrides, Stage};

#[test]
fn inner_region_tail_error_is_below_outer_region() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/hovercraft.json");
    for seed in [1, 2, 3] {
        let mut sc = load_scenario(&path).unwrap();
        sc.seed = seed;
        let dir = tempfile::tempdir().unwrap();
        let rep = run_scenario(&sc, &[Stage::Collect, Stage::Grid], dir.path(), &Overrides::default()).unwrap();
        let g = rep.grid.expect("grid summary");
        eprintln!("seed {seed}: inner p99 {:.3} outer p99 {:.3}", g.inner.p99, g.outer.p99);
        assert!(g.inner.points > 0 && g.outer.points > 0);
        assert!(g.inner.p99 <= g.outer.p99, "seed {seed}");
        assert!(g.inner.median <= g.outer.median, "seed {seed}");
    }
}

#[test]
fn exact_predictor_has_zero_grid_error() {
    let mut sc = certeq::Scenario::hovercraft(1);
    sc.grid.side = 12;
    let dir = tempfile::tempdir().unwrap();
    let ov = Overrides {
        predictor: Some(PredictorKind::True),
        ..Default::default()
    };
    let rep = run_scenario(&sc, &[Stage::Grid], dir.path(), &ov).unwrap();
    assert!(rep.error.is_none());
    assert!(rep.grid.unwrap().max <= 1e-12);
}
