//! State-space plants, closed-loop system responses and FIR operator algebra.

mod envelope;
mod fir;
mod observer;

pub use envelope::{fit_decay_envelope, DecayEnvelope};
pub use fir::FirOperator;
pub use observer::{closed_loop_responses, ClosedLoopResponses, LqgWeights, StaticOutputController};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat, Vector};

/// Discrete-time plant `x⁺ = Ax + Bu + w`, `y = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: Mat,
    b: Mat,
    c: Mat,
}

impl LinearSystem {
    /// Validates shapes, controllability of `(A, B)` and observability of `(A, C)`.
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        check_dim("A columns", n, a.ncols())?;
        check_dim("B rows", n, b.nrows())?;
        check_dim("C columns", n, c.ncols())?;
        if b.ncols() == 0 || c.nrows() == 0 {
            return Err(Error::InvalidInput("input and output dimensions must be positive".into()));
        }
        if linalg::rank(&linalg::controllability_matrix(&a, &b)) != n {
            return Err(Error::InvalidInput("(A, B) is not controllable".into()));
        }
        if linalg::rank(&linalg::observability_matrix(&a, &c)) != n {
            return Err(Error::InvalidInput("(A, C) is not observable".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Scalar plant `x⁺ = ax + bu`, `y = cx`.
    pub fn scalar(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(
            Mat::from_element(1, 1, a),
            Mat::from_element(1, 1, b),
            Mat::from_element(1, 1, c),
        )
    }

    /// Planar hovercraft: two decoupled double integrators with step 0.1,
    /// position outputs.
    pub fn hovercraft() -> Self {
        let a = linalg::mat_from_rows(&[
            &[1.0, 0.1, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.1],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let b = linalg::mat_from_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
        let c = linalg::mat_from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0]]);
        Self { a, b, c }
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Measurement dimension.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// `Ax + Bu + w`.
    pub fn simulate_step(&self, x: &Vector, u: &Vector, w: &Vector) -> Result<Vector> {
        check_dim("state", self.n(), x.len())?;
        check_dim("input", self.m(), u.len())?;
        check_dim("disturbance", self.n(), w.len())?;
        Ok(&self.a * x + &self.b * u + w)
    }

    /// `Cx`.
    pub fn output(&self, x: &Vector) -> Result<Vector> {
        check_dim("state", self.n(), x.len())?;
        Ok(&self.c * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_step_is_zero() {
        let s = LinearSystem::hovercraft();
        let z4 = Vector::zeros(4);
        let x = s.simulate_step(&z4, &Vector::zeros(2), &z4).unwrap();
        assert_eq!(x, z4);
    }

    #[test]
    fn hovercraft_velocity_integrates_into_position() {
        let s = LinearSystem::hovercraft();
        let x = Vector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let next = s
            .simulate_step(&x, &Vector::zeros(2), &Vector::zeros(4))
            .unwrap();
        assert_eq!(next, Vector::from_vec(vec![0.1, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn scalar_step() {
        let s = LinearSystem::scalar(2.0, 1.0, 1.0).unwrap();
        let x = s
            .simulate_step(
                &Vector::from_element(1, 1.0),
                &Vector::from_element(1, -1.0),
                &Vector::zeros(1),
            )
            .unwrap();
        assert_eq!(x[0], 1.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = LinearSystem::hovercraft();
        let err = s
            .simulate_step(&Vector::zeros(3), &Vector::zeros(2), &Vector::zeros(4))
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn uncontrollable_pair_is_rejected() {
        let a = Mat::identity(2, 2);
        let b = linalg::mat_from_rows(&[&[1.0], &[0.0]]);
        let c = Mat::identity(2, 2);
        assert!(LinearSystem::new(a, b, c).is_err());
    }

    #[test]
    fn hovercraft_preset_is_controllable_and_observable() {
        let s = LinearSystem::hovercraft();
        let rebuilt = LinearSystem::new(s.a().clone(), s.b().clone(), s.c().clone()).unwrap();
        assert_eq!(rebuilt.p(), 2);
        assert_eq!((rebuilt.n(), rebuilt.m()), (4, 2));
    }
}
