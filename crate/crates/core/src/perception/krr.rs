
use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::math;

/// Kernel ridge regression with the RBF kernel `exp(−α‖z − z'‖²)`:
/// `ĥ(z) = Y(λI + K)⁻¹k(z)`.
#[derive(Debug, Clone)]
pub struct KrrRegressor {
    centers: alloc::vec::Vec<Vector>,
    /// `(λI + K)⁻¹Yᵀ`, one row per training point.
    coef: Mat,
    alpha: f64,
}

/// Largest tolerated 1-norm condition estimate of `λI + K`.
const MAX_CONDITION: f64 = 1e13;

impl KrrRegressor {
    pub fn fit(data: &Dataset, alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput("rbf spread must be positive".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput("regularizer must be nonnegative".into()));
        }
        let t = data.len();
        let zs = data.observations();
        let mut gram = Mat::from_fn(t, t, |i, j| {
            math::exp(-alpha * (&zs[i] - &zs[j]).norm_squared())
        });
        for i in 0..t {
            gram[(i, i)] += lambda;
        }
        let y = Mat::from_fn(t, data.p(), |i, j| data.labels()[i][j]);
        let norm1 = one_norm(&gram);
        let coef = match gram.clone().cholesky() {
            Some(ch) => {
                let inv = ch.inverse();
                let cond = norm1 * one_norm(&inv);
                if !(cond <= MAX_CONDITION) {
                    return Err(singular(cond));
                }
                inv * y
            }
            None => {
                let inv = gram.lu().try_inverse().ok_or_else(|| singular(f64::INFINITY))?;
                let cond = norm1 * one_norm(&inv);
                if !(cond <= MAX_CONDITION) {
                    return Err(singular(cond));
                }
                inv * y
            }
        };
        Ok(Self {
            centers: zs.to_vec(),
            coef,
            alpha,
        })
    }

    pub fn predict(&self, z: &Vector) -> Vector {
        let mut out = Vector::zeros(self.coef.ncols());
        for (i, c) in self.centers.iter().enumerate() {
            let k = math::exp(-self.alpha * (c - z).norm_squared());
            out += self.coef.row(i).transpose() * k;
        }
        out
    }
}

fn one_norm(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn singular(cond: f64) -> Error {
    Error::Numerical {
        message: "kernel system λI + K is numerically singular".into(),
        condition: cond,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(zs: &[f64], ys: &[f64]) -> Dataset {
        Dataset::new(
            zs.iter().map(|z| Vector::from_element(1, *z)).collect(),
            ys.iter().map(|y| Vector::from_element(1, *y)).collect(),
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn single_point_interpolates() {
        let k = KrrRegressor::fit(&data(&[0.4], &[2.5]), 1.0, 0.0).unwrap();
        assert!((k.predict(&Vector::from_element(1, 0.4))[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn heavy_regularization_shrinks_to_zero() {
        let k = KrrRegressor::fit(&data(&[0.0, 0.5, 1.0], &[1.0, -1.0, 0.5]), 1.0, 1e9).unwrap();
        assert!(k.predict(&Vector::from_element(1, 0.5)).norm() <= 1e-6);
    }

    #[test]
    fn interpolates_five_points() {
        let zs = [-1.0, -0.4, 0.1, 0.7, 1.5];
        let ys = [0.3, -1.2, 2.0, 0.8, -0.5];
        let d = data(&zs, &ys);
        let k = KrrRegressor::fit(&d, 2.0, 0.0).unwrap();
        // Oracle: direct dense solve of the interpolation system.
        let g = Mat::from_fn(5, 5, |i, j| (-2.0 * (zs[i] - zs[j]).powi(2)).exp());
        let w = g.lu().solve(&Vector::from_row_slice(&ys)).unwrap();
        for i in 0..5 {
            let pred = k.predict(&Vector::from_element(1, zs[i]))[0];
            let direct: f64 = (0..5).map(|j| w[j] * (-2.0 * (zs[i] - zs[j]).powi(2)).exp()).sum();
            assert!((pred - ys[i]).abs() < 1e-6);
            assert!((pred - direct).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicate_points_without_ridge_are_singular() {
        let d = data(&[0.2, 0.2], &[1.0, 2.0]);
        let err = KrrRegressor::fit(&d, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }
}
