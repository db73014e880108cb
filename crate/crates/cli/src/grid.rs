//! Perception error over a measurement grid.

use anyhow::{ensure, Result};
use certeq_core::closed_loop::{grid_points, Perception};
use certeq_core::linalg::{self, Vector};
use certeq_core::perception::ObservationMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{ErrorNorm, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub y: Vector,
    pub error: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub points: usize,
    pub median: f64,
    pub p99: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub max: f64,
    pub inner: RegionSummary,
    pub outer: RegionSummary,
}

fn norm(v: &Vector, kind: ErrorNorm) -> f64 {
    match kind {
        ErrorNorm::Inf => linalg::vec_inf_norm(v),
        ErrorNorm::Two => v.norm(),
    }
}

/// Evaluates `‖ĥ(g(y)) − y‖` on a `side^p` grid. `coverage` returns `s_T`
/// where the predictor defines one and zero otherwise.
pub fn evaluate_error_grid(
    perception: &dyn Perception,
    coverage: &(dyn Fn(&Vector) -> f64 + Sync),
    map: &dyn ObservationMap,
    spec: &GridSpec,
) -> Result<Vec<GridPoint>> {
    ensure!(spec.radius <= map.box_radius() + 1e-12, "grid radius exceeds the map's working box");
    let pts = grid_points(map.p(), spec.side, spec.radius);
    Ok(pts
        .into_par_iter()
        .map(|y| {
            let z = map.forward(&y);
            let err = norm(&(perception.perceive(&z, &y) - &y), spec.norm);
            GridPoint {
                coverage: coverage(&z),
                y,
                error: err,
            }
        })
        .collect())
}

/// Nearest-rank percentile of an unsorted slice.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

fn region(points: &[&GridPoint]) -> RegionSummary {
    let e: Vec<f64> = points.iter().map(|p| p.error).collect();
    RegionSummary {
        points: e.len(),
        median: percentile(&e, 50.0),
        p99: percentile(&e, 99.0),
    }
}

/// Median and 99th percentile in the inner annulus and in the outer annulus
/// with the inner one removed; radii are Euclidean in the measurement plane.
pub fn summarize(points: &[GridPoint], spec: &GridSpec) -> GridSummary {
    let within = |p: &GridPoint, [lo, hi]: [f64; 2]| {
        let r = p.y.norm();
        r >= lo && r <= hi
    };
    let inner: Vec<&GridPoint> = points.iter().filter(|p| within(p, spec.inner)).collect();
    let outer: Vec<&GridPoint> = points
        .iter()
        .filter(|p| within(p, spec.outer) && !within(p, spec.inner))
        .collect();
    GridSummary {
        max: points.iter().map(|p| p.error).fold(0.0, f64::max),
        inner: region(&inner),
        outer: region(&outer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use certeq_core::closed_loop::ExactPerception;
    use certeq_core::perception::SinusoidalLift;

    #[test]
    fn exact_perception_has_no_error() {
        let map = SinusoidalLift::new(2, 5, 2.5, 1).unwrap();
        let spec = GridSpec {
            side: 11,
            ..GridSpec::default()
        };
        let pts = evaluate_error_grid(&ExactPerception, &|_| 0.0, &map, &spec).unwrap();
        assert_eq!(pts.len(), 121);
        assert!(pts.iter().all(|p| p.error == 0.0));
    }

    #[test]
    fn zero_prediction_costs_the_norm_of_y() {
        let map = SinusoidalLift::new(2, 5, 2.5, 1).unwrap();
        let zero = |_: &Vector| Vector::zeros(2);
        let pts = evaluate_error_grid(&zero, &|_| 0.0, &map, &GridSpec { side: 5, ..GridSpec::default() }).unwrap();
        for p in pts {
            assert_eq!(p.error, linalg::vec_inf_norm(&p.y));
            assert_eq!(p.coverage, 0.0);
        }
    }

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&v, 99.0), 99.0);
        assert_eq!(percentile(&[3.0], 99.0), 3.0);
    }
}
