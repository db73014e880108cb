use alloc::sync::Arc;

use super::{Dataset, Kernel, ObservationMap};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;

/// Nadaraya-Watson estimator `ĥ(z) = Σ κ(ρ(z_t, z)/γ) y_t / s_T(z)`.
#[derive(Debug, Clone)]
pub struct NwRegressor {
    data: Arc<Dataset>,
    map: Arc<dyn ObservationMap>,
    kernel: Kernel,
    gamma: f64,
}

impl NwRegressor {
    pub fn new(
        data: Arc<Dataset>,
        map: Arc<dyn ObservationMap>,
        kernel: Kernel,
        gamma: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput("bandwidth must be positive".into()));
        }
        if !data.is_empty() {
            check_dim("observation", map.q(), data.q())?;
            check_dim("label", map.p(), data.p())?;
        }
        Ok(Self {
            data,
            map,
            kernel,
            gamma,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn map(&self) -> &Arc<dyn ObservationMap> {
        &self.map
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn weight(&self, zt: &Vector, z: &Vector) -> f64 {
        self.kernel.eval(self.map.distance(zt, z) / self.gamma)
    }

    /// Coverage `s_T(z)`.
    pub fn coverage(&self, z: &Vector) -> f64 {
        self.data
            .observations()
            .iter()
            .map(|zt| self.weight(zt, z))
            .sum()
    }

    /// Prediction and coverage; `(0, 0)` when no training point is within
    /// the bandwidth.
    pub fn predict(&self, z: &Vector) -> (Vector, f64) {
        let mut acc = Vector::zeros(self.map.p());
        let mut s = 0.0;
        for (zt, yt) in self.data.observations().iter().zip(self.data.labels()) {
            let w = self.weight(zt, z);
            if w > 0.0 {
                acc.axpy(w, yt, 1.0);
                s += w;
            }
        }
        if s > 0.0 {
            (acc / s, s)
        } else {
            (Vector::zeros(self.map.p()), 0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{RasterMap, SinusoidalLift};
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn lift() -> Arc<dyn ObservationMap> {
        Arc::new(SinusoidalLift::new(2, 5, 2.5, 1).unwrap())
    }

    fn dataset(map: &Arc<dyn ObservationMap>, ys: &[[f64; 2]]) -> Arc<Dataset> {
        let ys: Vec<Vector> = ys.iter().map(|y| Vector::from_row_slice(y)).collect();
        let zs = ys.iter().map(|y| map.forward(y)).collect();
        Arc::new(Dataset::new(zs, ys, 0.0, 0.0).unwrap())
    }

    #[test]
    fn single_point_returns_its_label() {
        let map = lift();
        let data = dataset(&map, &[[0.3, -0.2]]);
        let z0 = data.observations()[0].clone();
        let nw = NwRegressor::new(data, map, Kernel::triangular(), 0.1).unwrap();
        let (y, s) = nw.predict(&z0);
        assert_eq!(y, Vector::from_row_slice(&[0.3, -0.2]));
        assert_eq!(s, 1.0);
    }

    #[test]
    fn far_query_has_zero_coverage() {
        let map = lift();
        let data = dataset(&map, &[[0.3, -0.2], [0.5, 0.5]]);
        let nw = NwRegressor::new(data, map.clone(), Kernel::triangular(), 0.05).unwrap();
        let (y, s) = nw.predict(&map.forward(&Vector::from_row_slice(&[-2.0, 2.0])));
        assert_eq!((y, s), (Vector::zeros(2), 0.0));
    }

    #[test]
    fn equidistant_points_average() {
        let map: Arc<dyn ObservationMap> = Arc::new(RasterMap::new(2, 10, 2.0).unwrap());
        let raw = dataset(&map, &[[0.0, 0.0]]);
        let z = raw.observations()[0].clone();
        // Two observations at the same distance from z, with distinct labels.
        let mut za = z.clone();
        let mut zb = z.clone();
        za[0] += 0.01;
        zb[0] -= 0.01;
        let data = Arc::new(
            Dataset::new(
                vec![za, zb],
                vec![Vector::from_row_slice(&[1.0, 0.0]), Vector::from_row_slice(&[0.0, 3.0])],
                0.0,
                0.0,
            )
            .unwrap(),
        );
        let nw = NwRegressor::new(data, map, Kernel::triangular(), 0.5).unwrap();
        let (y, _) = nw.predict(&z);
        assert!((y - Vector::from_row_slice(&[0.5, 1.5])).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn prediction_in_convex_hull_of_active_labels(
            pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..30),
            q in (-2.0f64..2.0, -2.0f64..2.0),
            gamma in 0.05f64..2.0,
        ) {
            let map = lift();
            let ys: Vec<[f64; 2]> = pts.iter().map(|(a, b)| [*a, *b]).collect();
            let data = dataset(&map, &ys);
            let nw = NwRegressor::new(data.clone(), map.clone(), Kernel::triangular(), gamma).unwrap();
            let z = map.forward(&Vector::from_row_slice(&[q.0, q.1]));
            let (y, s) = nw.predict(&z);
            if s > 0.0 {
                let active: Vec<&Vector> = data
                    .observations()
                    .iter()
                    .zip(data.labels())
                    .filter(|(zt, _)| nw.kernel().eval(map.distance(zt, &z) / gamma) > 0.0)
                    .map(|(_, yt)| yt)
                    .collect();
                // Support-function test over a fan of directions.
                for k in 0..32 {
                    let th = k as f64 * core::f64::consts::PI / 16.0;
                    let d = Vector::from_row_slice(&[th.cos(), th.sin()]);
                    let hi = active.iter().map(|v| v.dot(&d)).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(y.dot(&d) <= hi + 1e-12);
                }
            } else {
                prop_assert_eq!(y, Vector::zeros(2));
            }
        }
    }
}
