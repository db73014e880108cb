//! Dense linear-algebra helpers shared by the modules.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(m: &Mat) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..m.nrows() {
        let s: f64 = m.row(i).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

pub fn vec_inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn svd_tol(m: &Mat, sv: &Vector) -> f64 {
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let dim = m.nrows().max(m.ncols()) as f64;
    dim * f64::EPSILON * smax.max(1e-300)
}

/// Numerical rank from the singular values.
pub fn rank(m: &Mat) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let tol = svd_tol(m, &sv).max(1e-10 * sv.max());
    sv.iter().filter(|&&s| s > tol).count()
}

/// Moore-Penrose pseudoinverse via SVD.
pub fn pinv(m: &Mat) -> Mat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Mat::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let tol = svd_tol(m, &svd.singular_values);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let k = svd.singular_values.len();
    let mut out = Mat::zeros(c, r);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > tol {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| math::sqrt(z.re * z.re + z.im * z.im))
        .fold(0.0, f64::max)
}

pub fn controllability_matrix(a: &Mat, b: &Mat) -> Mat {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = Mat::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&blk);
        blk = a * &blk;
    }
    out
}

pub fn observability_matrix(a: &Mat, c: &Mat) -> Mat {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

/// Stabilizing solution of the discrete algebraic Riccati equation
/// `P = Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA`, found by fixed-point iteration.
pub fn solve_dare(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    let mut p = q.clone();
    for _ in 0..100_000 {
        let s = r + b.transpose() * &p * b;
        let s_inv = s.clone().try_inverse().ok_or_else(|| Error::Numerical {
            message: "singular R + BᵀPB in Riccati iteration".into(),
            condition: f64::INFINITY,
        })?;
        let atp = a.transpose() * &p;
        let next = q + &atp * a - &atp * b * s_inv * b.transpose() * &p * a;
        let next = (&next + next.transpose()) * 0.5;
        let diff = (&next - &p).abs().max();
        p = next;
        if diff <= 1e-13 * (1.0 + p.abs().max()) {
            return Ok(p);
        }
    }
    Err(Error::Numerical {
        message: "Riccati iteration did not converge".into(),
        condition: f64::INFINITY,
    })
}

/// Infinite-horizon LQR gain `K` such that `u = Kx` stabilizes `A + BK`.
pub fn lqr_gain(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    let p = solve_dare(a, b, q, r)?;
    let s = r + b.transpose() * &p * b;
    let s_inv = s.try_inverse().ok_or_else(|| Error::Numerical {
        message: "singular R + BᵀPB".into(),
        condition: f64::INFINITY,
    })?;
    Ok(-(s_inv * b.transpose() * p * a))
}

/// Steady-state Kalman predictor gain `L` for `x̂⁺ = Ax̂ + Bu + L(y − Cx̂)`.
pub fn kalman_gain(a: &Mat, c: &Mat, w: &Mat, v: &Mat) -> Result<Mat> {
    let sigma = solve_dare(&a.transpose(), &c.transpose(), w, v)?;
    let s = c * &sigma * c.transpose() + v;
    let s_inv = s.try_inverse().ok_or_else(|| Error::Numerical {
        message: "singular innovation covariance".into(),
        condition: f64::INFINITY,
    })?;
    Ok(a * sigma * c.transpose() * s_inv)
}

/// Entry-wise square root of a diagonal positive semidefinite matrix.
pub fn diag_sqrt(m: &Mat) -> Result<Mat> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "weight matrix must be square, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                return Err(Error::InvalidInput(
                    "weight matrices must be diagonal".into(),
                ));
            }
        }
        if m[(i, i)] < 0.0 {
            return Err(Error::InvalidInput(
                "weight matrices must be positive semidefinite".into(),
            ));
        }
        out[(i, i)] = math::sqrt(m[(i, i)]);
    }
    Ok(out)
}

/// Builds a matrix from row slices.
pub fn mat_from_rows(rows: &[&[f64]]) -> Mat {
    let r = rows.len();
    let c = if r == 0 { 0 } else { rows[0].len() };
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn stack_rows(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

pub fn stack_cols(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Powers `M^0, …, M^k`.
pub fn powers(m: &Mat, k: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(Mat::identity(m.nrows(), m.ncols()));
    for i in 0..k {
        let next = m * &out[i];
        out.push(next);
    }
    out
}
