use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat, Vector};

/// Causal convolution operator with taps `Φ(0), …, Φ(H)`.
///
/// Applied to a signal `w`, it produces `y_t = Σ_k Φ(k) w_{t−k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirOperator {
    rows: usize,
    cols: usize,
    taps: Vec<Mat>,
}

impl FirOperator {
    pub fn new(taps: Vec<Mat>) -> Result<Self> {
        let first = taps
            .first()
            .ok_or_else(|| Error::InvalidInput("an FIR operator needs at least one tap".into()))?;
        let (rows, cols) = first.shape();
        for t in &taps {
            check_dim("tap rows", rows, t.nrows())?;
            check_dim("tap columns", cols, t.ncols())?;
        }
        Ok(Self { rows, cols, taps })
    }

    /// All-zero operator with `horizon + 1` taps.
    pub fn zeros(rows: usize, cols: usize, horizon: usize) -> Self {
        Self {
            rows,
            cols,
            taps: vec![Mat::zeros(rows, cols); horizon + 1],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn horizon(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn taps(&self) -> &[Mat] {
        &self.taps
    }

    /// Tap `k`, or `None` past the horizon.
    pub fn tap(&self, k: usize) -> Option<&Mat> {
        self.taps.get(k)
    }

    pub fn tap_mut(&mut self, k: usize) -> &mut Mat {
        &mut self.taps[k]
    }

    pub fn is_strictly_causal(&self) -> bool {
        self.taps[0].iter().all(|v| *v == 0.0)
    }

    /// Per-row absolute sums over all taps and columns.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.rows];
        for t in &self.taps {
            for i in 0..self.rows {
                sums[i] += t.row(i).iter().map(|v| v.abs()).sum::<f64>();
            }
        }
        sums
    }

    /// Induced ℓ∞ → ℓ∞ norm: the largest absolute row sum over all taps.
    pub fn l1_norm(&self) -> f64 {
        self.row_sums().into_iter().fold(0.0, f64::max)
    }

    /// Sign pattern achieving the norm.
    ///
    /// Returns the maximizing row and an input of length `H + 1` whose
    /// response at time `H` equals the norm in that row.
    pub fn l1_witness(&self) -> (usize, Vec<Vector>) {
        let sums = self.row_sums();
        let mut row = 0;
        for (i, s) in sums.iter().enumerate() {
            if *s > sums[row] {
                row = i;
            }
        }
        let h = self.horizon();
        let mut w = vec![Vector::zeros(self.cols); h + 1];
        for (k, t) in self.taps.iter().enumerate() {
            for j in 0..self.cols {
                w[h - k][j] = if t[(row, j)] < 0.0 { -1.0 } else { 1.0 };
            }
        }
        (row, w)
    }

    /// Convolution with a finite input; the output has the input's length.
    pub fn apply(&self, input: &[Vector]) -> Result<Vec<Vector>> {
        let mut out = Vec::with_capacity(input.len());
        for w in input {
            check_dim("signal", self.cols, w.len())?;
        }
        for t in 0..input.len() {
            let mut y = Vector::zeros(self.rows);
            for (k, tap) in self.taps.iter().enumerate().take(t + 1) {
                y.gemv(1.0, tap, &input[t - k], 1.0);
            }
            out.push(y);
        }
        Ok(out)
    }

    /// Largest induced ∞-norm of a single tap, per tap.
    pub fn tap_inf_norms(&self) -> Vec<f64> {
        self.taps.iter().map(linalg::inf_norm).collect()
    }

    /// `M Φ(k)` for every tap.
    pub fn left_mul(&self, m: &Mat) -> Result<Self> {
        check_dim("left factor columns", self.rows, m.ncols())?;
        Ok(Self {
            rows: m.nrows(),
            cols: self.cols,
            taps: self.taps.iter().map(|t| m * t).collect(),
        })
    }

    /// `Φ(k) M` for every tap.
    pub fn right_mul(&self, m: &Mat) -> Result<Self> {
        check_dim("right factor rows", self.cols, m.nrows())?;
        Ok(Self {
            rows: self.rows,
            cols: m.ncols(),
            taps: self.taps.iter().map(|t| t * m).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            taps: self.taps.iter().map(|t| t * s).collect(),
        }
    }

    /// Sum of two operators; the shorter one is zero-padded.
    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim("summand rows", self.rows, other.rows)?;
        check_dim("summand columns", self.cols, other.cols)?;
        let h = self.horizon().max(other.horizon());
        let mut out = Self::zeros(self.rows, self.cols, h);
        for k in 0..=h {
            if let Some(t) = self.tap(k) {
                out.taps[k] += t;
            }
            if let Some(t) = other.tap(k) {
                out.taps[k] += t;
            }
        }
        Ok(out)
    }

    /// Stacks operators vertically, padding to a common horizon.
    pub fn vstack(parts: &[&Self]) -> Result<Self> {
        let cols = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("nothing to stack".into()))?
            .cols;
        let h = parts.iter().map(|p| p.horizon()).max().unwrap_or(0);
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = Self::zeros(rows, cols, h);
        let mut r0 = 0;
        for p in parts {
            check_dim("stacked columns", cols, p.cols)?;
            for (k, t) in p.taps.iter().enumerate() {
                out.taps[k].view_mut((r0, 0), (p.rows, cols)).copy_from(t);
            }
            r0 += p.rows;
        }
        Ok(out)
    }

    /// Places operators side by side, padding to a common horizon.
    pub fn hstack(parts: &[&Self]) -> Result<Self> {
        let rows = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("nothing to stack".into()))?
            .rows;
        let h = parts.iter().map(|p| p.horizon()).max().unwrap_or(0);
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols, h);
        let mut c0 = 0;
        for p in parts {
            check_dim("stacked rows", rows, p.rows)?;
            for (k, t) in p.taps.iter().enumerate() {
                out.taps[k].view_mut((0, c0), (rows, p.cols)).copy_from(t);
            }
            c0 += p.cols;
        }
        Ok(out)
    }

    /// Largest entry-wise difference to another operator of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dim("compared rows", self.rows, other.rows)?;
        check_dim("compared columns", self.cols, other.cols)?;
        let h = self.horizon().max(other.horizon());
        let zero = Mat::zeros(self.rows, self.cols);
        let mut worst = 0.0_f64;
        for k in 0..=h {
            let a = self.tap(k).unwrap_or(&zero);
            let b = other.tap(k).unwrap_or(&zero);
            worst = worst.max((a - b).abs().max());
        }
        Ok(worst)
    }
}
