//! Tracking problem rewritten as disturbance rejection.
//!
//! With `ξ = [x − r; r]` and `ω = [w/σ_w; (r⁺ − r)/Δ]` the loop reads
//! `ξ⁺ = Āξ + B̄u + H̄ω`, `ȳ = C̄ξ + Nη`.

use alloc::format;

use crate::error::{check_dim, Error, Result};
use crate::lin_sys::LinearSystem;
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    sys: LinearSystem,
    pub a_bar: Mat,
    pub b_bar: Mat,
    pub c_bar: Mat,
    pub h_bar: Mat,
    pub n_bar: Mat,
    /// `[Q^{1/2} 0]`.
    pub q_bar_sqrt: Mat,
    pub r_sqrt: Mat,
    pub sigma_w: f64,
    pub delta: f64,
    pub sigma_eta: f64,
    /// Columns spanning the admissible references, `x_ref = E ρ`.
    embedding: Mat,
}

/// Builds the augmented matrices. References default to the measurement
/// subspace, `E = C†`.
pub fn build_tracking_augmentation(
    sys: &LinearSystem,
    q: &Mat,
    r: &Mat,
    sigma_w: f64,
    delta: f64,
    sigma_eta: f64,
) -> Result<AugmentedSystem> {
    let n = sys.n();
    check_dim("Q rows", n, q.nrows())?;
    check_dim("Q columns", n, q.ncols())?;
    check_dim("R rows", sys.m(), r.nrows())?;
    check_dim("R columns", sys.m(), r.ncols())?;
    for (name, v) in [("σ_w", sigma_w), ("Δ", delta), ("σ_η", sigma_eta)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    let q_sqrt = linalg::diag_sqrt(q)?;
    let r_sqrt = linalg::diag_sqrt(r)?;
    let (a, b, c) = (sys.a(), sys.b(), sys.c());
    let eye = Mat::identity(n, n);
    let zn = Mat::zeros(n, n);
    let a_bar = linalg::stack_rows(&[
        &linalg::stack_cols(&[a, &(a - &eye)]),
        &linalg::stack_cols(&[&zn, &eye]),
    ]);
    let b_bar = linalg::stack_rows(&[b, &Mat::zeros(n, sys.m())]);
    let c_bar = linalg::stack_rows(&[
        &linalg::stack_cols(&[c, c]),
        &linalg::stack_cols(&[&Mat::zeros(n, n), &eye]),
    ]);
    let h_bar = linalg::stack_rows(&[
        &linalg::stack_cols(&[&(&eye * sigma_w), &(&eye * -delta)]),
        &linalg::stack_cols(&[&zn, &(&eye * delta)]),
    ]);
    let n_bar = linalg::stack_rows(&[&Mat::identity(sys.p(), sys.p()), &Mat::zeros(n, sys.p())]);
    let q_bar_sqrt = linalg::stack_cols(&[&q_sqrt, &zn]);
    let aug = AugmentedSystem {
        sys: sys.clone(),
        a_bar,
        b_bar,
        c_bar,
        h_bar,
        n_bar,
        q_bar_sqrt,
        r_sqrt,
        sigma_w,
        delta,
        sigma_eta,
        embedding: linalg::pinv(c),
    };
    aug.check_blocks()?;
    Ok(aug)
}

impl AugmentedSystem {
    pub fn system(&self) -> &LinearSystem {
        &self.sys
    }

    pub fn embedding(&self) -> &Mat {
        &self.embedding
    }

    /// Replaces the reference directions.
    pub fn with_embedding(mut self, e: Mat) -> Result<Self> {
        check_dim("embedding rows", self.sys.n(), e.nrows())?;
        self.embedding = e;
        Ok(self)
    }

    /// Pure regulation: no reference directions.
    pub fn without_reference(mut self) -> Self {
        self.embedding = Mat::zeros(self.sys.n(), 0);
        self
    }

    pub fn q_sqrt(&self) -> Mat {
        let n = self.sys.n();
        self.q_bar_sqrt.view((0, 0), (n, n)).into_owned()
    }

    /// Disturbance matrix of the error `x − Eρ`: `[σ_w I, −Δ E]`.
    pub fn error_disturbance(&self) -> Mat {
        error_disturbance(&self.embedding, self.sigma_w, self.delta)
    }

    /// The error coordinates evolve without the reference only when
    /// `(A − I)E = 0`.
    pub fn check_reference_drift(&self) -> Result<()> {
        let n = self.sys.n();
        let drift = (self.sys.a() - Mat::identity(n, n)) * &self.embedding;
        let size = drift.amax();
        if size > 1e-12 {
            return Err(Error::Synthesis(format!(
                "references along the embedding drift under A ((A − I)E has entry {size:.3e}); \
                 choose reference directions with (A − I)E = 0"
            )));
        }
        Ok(())
    }

    fn check_blocks(&self) -> Result<()> {
        let n = self.sys.n();
        let (a, b, c) = (self.sys.a(), self.sys.b(), self.sys.c());
        let eye = Mat::identity(n, n);
        let same = |m: &Mat, r0: usize, c0: usize, want: &Mat| {
            m.view((r0, c0), want.shape()).iter().zip(want.iter()).all(|(x, y)| x == y)
        };
        let ok = same(&self.a_bar, 0, 0, a)
            && same(&self.a_bar, 0, n, &(a - &eye))
            && same(&self.a_bar, n, 0, &Mat::zeros(n, n))
            && same(&self.a_bar, n, n, &eye)
            && same(&self.b_bar, 0, 0, b)
            && same(&self.b_bar, n, 0, &Mat::zeros(n, self.sys.m()))
            && same(&self.c_bar, 0, 0, c)
            && same(&self.c_bar, 0, n, c)
            && same(&self.c_bar, self.sys.p(), n, &eye)
            && same(&self.h_bar, n, 0, &Mat::zeros(n, n))
            && same(&self.h_bar, n, n, &(&eye * self.delta));
        if ok {
            Ok(())
        } else {
            Err(Error::Numerical {
                message: "augmented blocks do not match their definition".into(),
                condition: f64::NAN,
            })
        }
    }
}

pub(crate) fn error_disturbance(e: &Mat, sigma_w: f64, delta: f64) -> Mat {
    let n = e.nrows();
    linalg::stack_cols(&[&(Mat::identity(n, n) * sigma_w), &(e * -delta)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_from_rows;

    #[test]
    fn scalar_blocks() {
        let sys = LinearSystem::scalar(2.0, 1.0, 1.0).unwrap();
        let one = Mat::identity(1, 1);
        let aug = build_tracking_augmentation(&sys, &one, &one, 0.5, 0.2, 0.1).unwrap();
        assert_eq!(aug.a_bar, mat_from_rows(&[&[2.0, 1.0], &[0.0, 1.0]]));
        assert_eq!(aug.h_bar, mat_from_rows(&[&[0.5, -0.2], &[0.0, 0.2]]));
        assert_eq!(aug.c_bar, mat_from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]));
        assert!(aug.check_reference_drift().is_err());
        assert!(aug.without_reference().check_reference_drift().is_ok());
    }

    #[test]
    fn no_disturbance_gives_zero_h_bar() {
        let sys = LinearSystem::hovercraft();
        let aug = build_tracking_augmentation(&sys, &Mat::identity(4, 4), &Mat::identity(2, 2), 0.0, 0.0, 0.0)
            .unwrap();
        assert_eq!(aug.h_bar, Mat::zeros(8, 8));
        assert_eq!(aug.error_disturbance().amax(), 0.0);
    }

    #[test]
    fn hovercraft_blocks_and_embedding() {
        let sys = LinearSystem::hovercraft();
        let q = sys.c().transpose() * sys.c();
        let aug = build_tracking_augmentation(&sys, &q, &Mat::identity(2, 2), 0.05, 0.13, 0.01).unwrap();
        let a = sys.a();
        assert_eq!(aug.a_bar.view((0, 0), (4, 4)).into_owned(), *a);
        assert_eq!(aug.a_bar.view((0, 4), (4, 4)).into_owned(), a - Mat::identity(4, 4));
        assert_eq!(aug.n_bar.shape(), (6, 2));
        assert_eq!(aug.q_bar_sqrt.shape(), (4, 8));
        // Position references are fixed points of the hovercraft dynamics.
        assert!(aug.check_reference_drift().is_ok());
        assert!((aug.embedding() - sys.c().transpose()).amax() < 1e-12);
    }

    #[test]
    fn negative_delta_is_rejected() {
        let sys = LinearSystem::scalar(0.5, 1.0, 1.0).unwrap();
        let one = Mat::identity(1, 1);
        assert!(build_tracking_augmentation(&sys, &one, &one, 1.0, -0.1, 0.0).is_err());
        assert!(build_tracking_augmentation(&sys, &mat_from_rows(&[&[-1.0]]), &one, 1.0, 0.1, 0.0).is_err());
    }
}
