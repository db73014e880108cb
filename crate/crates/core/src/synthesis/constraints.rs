//! Tap-wise achievability constraints for finite impulse responses.
//!
//! Responses are indexed so that `x_k = Σ_t Φ_xw(t) w_{k−t} + Φ_xn(t) n_{k−t}`
//! and `u_k = Σ_t Φ_uw(t) w_{k−t} + Φ_un(t) n_{k−t}`. `Φ_xw`, `Φ_xn` and
//! `Φ_uw` start at tap 1; `Φ_un` may carry a feedthrough tap 0. With
//! `Φ(H+1) = 0` the two z-domain identities become, for `k = 0, …, H`,
//!
//! ```text
//! Φ_x·(k+1) = A Φ_x·(k) + B Φ_u·(k) + δ_k0 [I 0]
//! Φ_·w(k+1) = Φ_·w(k) A + Φ_·n(k) C + δ_k0 [I; 0]
//! ```

use alloc::vec::Vec;

use crate::error::{check_dim, Result};
use crate::lin_sys::{FirOperator, LinearSystem};
use crate::linalg::Mat;

/// The four closed-loop maps of an output-feedback loop, `horizon + 1` taps each.
#[derive(Debug, Clone, PartialEq)]
pub struct SlsResponses {
    pub phi_xw: FirOperator,
    pub phi_xn: FirOperator,
    pub phi_uw: FirOperator,
    pub phi_un: FirOperator,
}

impl SlsResponses {
    pub fn horizon(&self) -> usize {
        self.phi_xw.horizon()
    }

    pub fn validate(&self, sys: &LinearSystem) -> Result<()> {
        let (n, m, p) = (sys.n(), sys.m(), sys.p());
        let h = self.horizon();
        for (what, op, r, c) in [
            ("Φ_xw", &self.phi_xw, n, n),
            ("Φ_xn", &self.phi_xn, n, p),
            ("Φ_uw", &self.phi_uw, m, n),
            ("Φ_un", &self.phi_un, m, p),
        ] {
            check_dim(what, r, op.rows())?;
            check_dim(what, c, op.cols())?;
            check_dim("response horizon", h, op.horizon())?;
        }
        Ok(())
    }
}

/// A sparse linear equation `Σ coef·v[idx] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Vectorization of the response taps: `Φ_xw(1..H)`, `Φ_xn(1..H)`,
/// `Φ_uw(1..H)`, then `Φ_un(0..H)`, each tap row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapLayout {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Xw,
    Xn,
    Uw,
    Un,
}

impl TapLayout {
    fn shape(&self, b: Block) -> (usize, usize) {
        match b {
            Block::Xw => (self.n, self.n),
            Block::Xn => (self.n, self.p),
            Block::Uw => (self.m, self.n),
            Block::Un => (self.m, self.p),
        }
    }

    fn offset(&self, b: Block) -> usize {
        let h = self.horizon;
        let (n, m, p) = (self.n, self.m, self.p);
        match b {
            Block::Xw => 0,
            Block::Xn => h * n * n,
            Block::Uw => h * (n * n + n * p),
            Block::Un => h * (n * n + n * p + m * n),
        }
    }

    pub fn len(&self) -> usize {
        self.offset(Block::Un) + (self.horizon + 1) * self.m * self.p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of entry `(i, j)` of tap `k`; `None` for taps fixed at zero.
    pub fn index(&self, b: Block, k: usize, i: usize, j: usize) -> Option<usize> {
        let (r, c) = self.shape(b);
        if k > self.horizon || (k == 0 && b != Block::Un) {
            return None;
        }
        let slot = if b == Block::Un { k } else { k - 1 };
        Some(self.offset(b) + slot * r * c + i * c + j)
    }

    pub fn vectorize(&self, resp: &SlsResponses) -> Vec<f64> {
        let mut v = alloc::vec![0.0; self.len()];
        for (b, op) in [
            (Block::Xw, &resp.phi_xw),
            (Block::Xn, &resp.phi_xn),
            (Block::Uw, &resp.phi_uw),
            (Block::Un, &resp.phi_un),
        ] {
            let (r, c) = self.shape(b);
            for k in 0..=self.horizon {
                for i in 0..r {
                    for j in 0..c {
                        if let Some(ix) = self.index(b, k, i, j) {
                            v[ix] = op.taps()[k][(i, j)];
                        }
                    }
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlsConstraints {
    pub layout: TapLayout,
    pub rows: Vec<ConstraintRow>,
}

impl SlsConstraints {
    /// Largest absolute row residual at the vectorized point `v`.
    pub fn residual_of(&self, v: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let lhs: f64 = r.terms.iter().map(|(i, c)| c * v[*i]).sum();
                (lhs - r.rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Residual of responses whose taps beyond `H` are zero. Any nonzero
    /// fixed-zero tap (`Φ_xw(0)` etc.) counts toward the residual.
    pub fn residual(&self, resp: &SlsResponses) -> f64 {
        let fixed = [&resp.phi_xw, &resp.phi_xn, &resp.phi_uw]
            .iter()
            .map(|op| op.taps()[0].amax())
            .fold(0.0, f64::max);
        fixed.max(self.residual_of(&self.layout.vectorize(resp)))
    }
}

/// Emits both achievability families for `sys` over horizon `H`.
pub fn assemble_sls_constraints(sys: &LinearSystem, horizon: usize) -> SlsConstraints {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let lay = TapLayout { n, m, p, horizon };
    let (a, b, c) = (sys.a(), sys.b(), sys.c());
    let mut rows = Vec::new();

    // Column family: Φ_x·(k+1) − AΦ_x·(k) − BΦ_u·(k) = δ_k0 [I 0].
    for (xb, ub, cols) in [(Block::Xw, Block::Uw, n), (Block::Xn, Block::Un, p)] {
        for k in 0..=horizon {
            for i in 0..n {
                for j in 0..cols {
                    let mut terms = Vec::new();
                    if let Some(ix) = lay.index(xb, k + 1, i, j) {
                        terms.push((ix, 1.0));
                    }
                    for l in 0..n {
                        if let Some(ix) = lay.index(xb, k, l, j) {
                            if a[(i, l)] != 0.0 {
                                terms.push((ix, -a[(i, l)]));
                            }
                        }
                    }
                    for l in 0..m {
                        if let Some(ix) = lay.index(ub, k, l, j) {
                            if b[(i, l)] != 0.0 {
                                terms.push((ix, -b[(i, l)]));
                            }
                        }
                    }
                    let rhs = if k == 0 && xb == Block::Xw && i == j { 1.0 } else { 0.0 };
                    rows.push(ConstraintRow { terms, rhs });
                }
            }
        }
    }

    // Row family: Φ_·w(k+1) − Φ_·w(k)A − Φ_·n(k)C = δ_k0 [I; 0].
    for (wb, nb, rdim) in [(Block::Xw, Block::Xn, n), (Block::Uw, Block::Un, m)] {
        for k in 0..=horizon {
            for i in 0..rdim {
                for j in 0..n {
                    let mut terms = Vec::new();
                    if let Some(ix) = lay.index(wb, k + 1, i, j) {
                        terms.push((ix, 1.0));
                    }
                    for l in 0..n {
                        if let Some(ix) = lay.index(wb, k, i, l) {
                            if a[(l, j)] != 0.0 {
                                terms.push((ix, -a[(l, j)]));
                            }
                        }
                    }
                    for l in 0..p {
                        if let Some(ix) = lay.index(nb, k, i, l) {
                            if c[(l, j)] != 0.0 {
                                terms.push((ix, -c[(l, j)]));
                            }
                        }
                    }
                    let rhs = if k == 0 && wb == Block::Xw && i == j { 1.0 } else { 0.0 };
                    rows.push(ConstraintRow { terms, rhs });
                }
            }
        }
    }
    SlsConstraints { layout: lay, rows }
}

/// Residual of both identities computed with whole-tap matrix products.
pub fn sls_residual_dense(sys: &LinearSystem, resp: &SlsResponses) -> f64 {
    let h = resp.horizon();
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let tap = |op: &FirOperator, k: usize, r: usize, c: usize| {
        op.tap(k).cloned().unwrap_or_else(|| Mat::zeros(r, c))
    };
    let mut worst = [&resp.phi_xw, &resp.phi_xn, &resp.phi_uw]
        .iter()
        .map(|op| op.taps()[0].amax())
        .fold(0.0, f64::max);
    for k in 0..=h {
        let mut lhs_x = tap(&resp.phi_xw, k + 1, n, n) - sys.a() * tap(&resp.phi_xw, k, n, n)
            - sys.b() * tap(&resp.phi_uw, k, m, n);
        let lhs_n = tap(&resp.phi_xn, k + 1, n, p) - sys.a() * tap(&resp.phi_xn, k, n, p)
            - sys.b() * tap(&resp.phi_un, k, m, p);
        let mut row_x = tap(&resp.phi_xw, k + 1, n, n) - tap(&resp.phi_xw, k, n, n) * sys.a()
            - tap(&resp.phi_xn, k, n, p) * sys.c();
        let row_u = tap(&resp.phi_uw, k + 1, m, n) - tap(&resp.phi_uw, k, m, n) * sys.a()
            - tap(&resp.phi_un, k, m, p) * sys.c();
        if k == 0 {
            lhs_x -= Mat::identity(n, n);
            row_x -= Mat::identity(n, n);
        }
        for r in [&lhs_x, &lhs_n, &row_x, &row_u] {
            worst = worst.max(r.amax());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lin_sys::{closed_loop_responses, LqgWeights, StaticOutputController};

    fn impulse(r: usize, c: usize, h: usize, k: usize, v: Mat) -> FirOperator {
        let mut op = FirOperator::zeros(r, c, h);
        *op.tap_mut(k) = v;
        op
    }

    #[test]
    fn dead_beat_scalar_satisfies_all_rows() {
        let sys = LinearSystem::scalar(0.0, 1.0, 1.0).unwrap();
        let resp = SlsResponses {
            phi_xw: impulse(1, 1, 2, 1, Mat::identity(1, 1)),
            phi_xn: FirOperator::zeros(1, 1, 2),
            phi_uw: FirOperator::zeros(1, 1, 2),
            phi_un: FirOperator::zeros(1, 1, 2),
        };
        let cons = assemble_sls_constraints(&sys, 2);
        assert_eq!(cons.residual(&resp), 0.0);
        assert_eq!(sls_residual_dense(&sys, &resp), 0.0);
    }

    #[test]
    fn perturbing_the_leading_tap_gives_that_residual() {
        let sys = LinearSystem::scalar(0.0, 1.0, 1.0).unwrap();
        let eps = 3.5e-4;
        let resp = SlsResponses {
            phi_xw: impulse(1, 1, 2, 1, Mat::from_element(1, 1, 1.0 + eps)),
            phi_xn: FirOperator::zeros(1, 1, 2),
            phi_uw: FirOperator::zeros(1, 1, 2),
            phi_un: FirOperator::zeros(1, 1, 2),
        };
        let cons = assemble_sls_constraints(&sys, 2);
        assert!((cons.residual(&resp) - eps).abs() < 1e-15);
    }

    /// Converts observer-loop responses (initial-state indexing) to the
    /// disturbance indexing used here.
    fn observer_as_sls(sys: &LinearSystem, h: usize) -> SlsResponses {
        let ctrl = StaticOutputController::lqg(sys, &LqgWeights::standard(sys)).unwrap();
        let r = closed_loop_responses(sys, &ctrl, h).unwrap();
        let shift = |op: &FirOperator| {
            let mut taps = alloc::vec![Mat::zeros(op.rows(), op.cols())];
            taps.extend(op.taps()[..h].iter().cloned());
            FirOperator::new(taps).unwrap()
        };
        SlsResponses {
            phi_xw: shift(&r.phi_x),
            phi_xn: r.phi_xn.clone(),
            phi_uw: shift(&r.phi_ux),
            phi_un: r.phi_un.clone(),
        }
    }

    #[test]
    fn truncated_observer_loop_is_nearly_achievable() {
        let sys = LinearSystem::hovercraft();
        let h = 300;
        let resp = observer_as_sls(&sys, h);
        let cons = assemble_sls_constraints(&sys, h);
        let res = cons.residual(&resp);
        assert!(res <= 1e-6, "residual {res}");
        assert!((res - sls_residual_dense(&sys, &resp)).abs() < 1e-12);
        // Too short a horizon leaves a visible tail.
        let short = observer_as_sls(&sys, 10);
        assert!(assemble_sls_constraints(&sys, 10).residual(&short) > 1e-3);
    }

    #[test]
    fn layout_indices_are_a_bijection() {
        let lay = TapLayout { n: 3, m: 2, p: 1, horizon: 4 };
        let mut seen = alloc::vec![false; lay.len()];
        for (b, r, c) in [(Block::Xw, 3, 3), (Block::Xn, 3, 1), (Block::Uw, 2, 3), (Block::Un, 2, 1)] {
            for k in 0..=4 {
                for i in 0..r {
                    for j in 0..c {
                        if let Some(ix) = lay.index(b, k, i, j) {
                            assert!(!seen[ix]);
                            seen[ix] = true;
                        }
                    }
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
    }
}
