use alloc::vec::Vec;

use super::{FirOperator, LinearSystem};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat, Vector};

/// Weights of the LQR regulator and the steady-state Kalman predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct LqgWeights {
    pub q: Mat,
    pub r: Mat,
    pub w: Mat,
    pub v: Mat,
}

impl LqgWeights {
    /// `Q = CᵀC`, `R = I`, `W = I`, `V = 0.1 I`.
    pub fn standard(sys: &LinearSystem) -> Self {
        let n = sys.n();
        Self {
            q: sys.c().transpose() * sys.c(),
            r: Mat::identity(sys.m(), sys.m()),
            w: Mat::identity(n, n),
            v: Mat::identity(sys.p(), sys.p()) * 0.1,
        }
    }
}

/// Luenberger observer with static state feedback:
/// `u = Kx̂ + u_ref`, `x̂⁺ = Ax̂ + Bu + L(y − Cx̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticOutputController {
    k: Mat,
    l: Mat,
    x_hat: Vector,
}

impl StaticOutputController {
    /// Checks shapes and that both `A + BK` and `A − LC` are Schur stable.
    pub fn new(sys: &LinearSystem, k: Mat, l: Mat) -> Result<Self> {
        check_dim("K rows", sys.m(), k.nrows())?;
        check_dim("K columns", sys.n(), k.ncols())?;
        check_dim("L rows", sys.n(), l.nrows())?;
        check_dim("L columns", sys.p(), l.ncols())?;
        let rho_k = linalg::spectral_radius(&(sys.a() + sys.b() * &k));
        let rho_l = linalg::spectral_radius(&(sys.a() - &l * sys.c()));
        let worst = rho_k.max(rho_l);
        if worst >= 1.0 {
            return Err(Error::Unstable {
                spectral_radius: worst,
            });
        }
        Ok(Self {
            k,
            l,
            x_hat: Vector::zeros(sys.n()),
        })
    }

    /// LQR feedback with a steady-state Kalman predictor.
    pub fn lqg(sys: &LinearSystem, weights: &LqgWeights) -> Result<Self> {
        let k = linalg::lqr_gain(sys.a(), sys.b(), &weights.q, &weights.r)?;
        let l = linalg::kalman_gain(sys.a(), sys.c(), &weights.w, &weights.v)?;
        Self::new(sys, k, l)
    }

    pub fn k(&self) -> &Mat {
        &self.k
    }

    pub fn l(&self) -> &Mat {
        &self.l
    }

    pub fn estimate(&self) -> &Vector {
        &self.x_hat
    }

    pub fn reset(&mut self) {
        self.x_hat.fill(0.0);
    }

    /// `Kx̂ + u_ref` for the current estimate.
    pub fn control(&self, u_ref: &Vector) -> Vector {
        &self.k * &self.x_hat + u_ref
    }

    /// Advances the estimate after input `u` was applied and `y` measured.
    pub fn observe(&mut self, sys: &LinearSystem, u: &Vector, y: &Vector) {
        let innovation = y - sys.c() * &self.x_hat;
        self.x_hat = sys.a() * &self.x_hat + sys.b() * u + &self.l * innovation;
    }

    /// Closed-loop matrix of the `(x, e)` dynamics with `e = x̂ − x`.
    pub fn closed_loop_matrix(&self, sys: &LinearSystem) -> Mat {
        let bk = sys.b() * &self.k;
        let n = sys.n();
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(sys.a() + &bk));
        m.view_mut((0, n), (n, n)).copy_from(&bk);
        m.view_mut((n, n), (n, n))
            .copy_from(&(sys.a() - &self.l * sys.c()));
        m
    }
}

/// Responses of the observer loop to the initial state, reference inputs and
/// measurement noise, for both the state and the applied input.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopResponses {
    pub phi_x: FirOperator,
    pub phi_xu: FirOperator,
    pub phi_xn: FirOperator,
    pub phi_ux: FirOperator,
    pub phi_uu: FirOperator,
    pub phi_un: FirOperator,
}

/// Unrolls the `(x, e)` dynamics up to `horizon` taps, starting from `x̂_0 = 0`.
pub fn closed_loop_responses(
    sys: &LinearSystem,
    ctrl: &StaticOutputController,
    horizon: usize,
) -> Result<ClosedLoopResponses> {
    let n = sys.n();
    let m = ctrl.closed_loop_matrix(sys);
    let rho = linalg::spectral_radius(&m);
    if rho >= 1.0 {
        return Err(Error::Unstable {
            spectral_radius: rho,
        });
    }
    let eye = Mat::identity(n, n);
    let x_sel = linalg::stack_cols(&[&eye, &Mat::zeros(n, n)]);
    let u_sel = &ctrl.k * linalg::stack_cols(&[&eye, &eye]);
    let init = linalg::stack_rows(&[&eye, &(-&eye)]);
    let ref_in = linalg::stack_rows(&[sys.b(), &Mat::zeros(n, sys.m())]);
    let noise_in = linalg::stack_rows(&[&Mat::zeros(n, sys.p()), &ctrl.l]);

    let pw = linalg::powers(&m, horizon);
    let mut x = Vec::with_capacity(horizon + 1);
    let mut xu = Vec::with_capacity(horizon + 1);
    let mut xn = Vec::with_capacity(horizon + 1);
    let mut ux = Vec::with_capacity(horizon + 1);
    let mut uu = Vec::with_capacity(horizon + 1);
    let mut un = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let state0 = &pw[t] * &init;
        x.push(&x_sel * &state0);
        ux.push(&u_sel * &state0);
        if t == 0 {
            xu.push(Mat::zeros(n, sys.m()));
            xn.push(Mat::zeros(n, sys.p()));
            uu.push(Mat::identity(sys.m(), sys.m()));
            un.push(Mat::zeros(sys.m(), sys.p()));
        } else {
            let r = &pw[t - 1] * &ref_in;
            let e = &pw[t - 1] * &noise_in;
            xu.push(&x_sel * &r);
            xn.push(&x_sel * &e);
            uu.push(&u_sel * &r);
            un.push(&u_sel * &e);
        }
    }
    Ok(ClosedLoopResponses {
        phi_x: FirOperator::new(x)?,
        phi_xu: FirOperator::new(xu)?,
        phi_xn: FirOperator::new(xn)?,
        phi_ux: FirOperator::new(ux)?,
        phi_uu: FirOperator::new(uu)?,
        phi_un: FirOperator::new(un)?,
    })
}
