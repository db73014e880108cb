//! Dense two-phase primal simplex.
//!
//! Problems are stated as `min cᵀx` subject to `A_eq x = b_eq`,
//! `A_ub x ≤ b_ub` and per-variable bounds, then rewritten in standard form
//! `Ax = b, x ≥ 0` with `b ≥ 0`. The tableau is row-major; artificial columns
//! are never stored because an artificial that leaves the basis never
//! re-enters. The final basis is refactorized with LU to recover a polished
//! primal point, dual multipliers and the duality gap.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Mat, Vector};

/// `min cᵀx` s.t. `A_eq x = b_eq`, `A_ub x ≤ b_ub`, `lower ≤ x ≤ upper`
/// (infinite bounds allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vector,
    pub a_eq: Mat,
    pub b_eq: Vector,
    pub a_ub: Mat,
    pub b_ub: Vector,
    pub lower: Vector,
    pub upper: Vector,
}

impl LpProblem {
    /// Nonnegative variables, no constraints.
    pub fn new(c: Vector) -> Self {
        let n = c.len();
        Self {
            c,
            a_eq: Mat::zeros(0, n),
            b_eq: Vector::zeros(0),
            a_ub: Mat::zeros(0, n),
            b_ub: Vector::zeros(0),
            lower: Vector::zeros(n),
            upper: Vector::from_element(n, f64::INFINITY),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        check_dim("equality columns", n, self.a_eq.ncols())?;
        check_dim("equality rhs", self.a_eq.nrows(), self.b_eq.len())?;
        check_dim("inequality columns", n, self.a_ub.ncols())?;
        check_dim("inequality rhs", self.a_ub.nrows(), self.b_ub.len())?;
        check_dim("lower bounds", n, self.lower.len())?;
        check_dim("upper bounds", n, self.upper.len())?;
        let finite = |m: &Mat| m.iter().all(|v| v.is_finite());
        if !finite(&self.a_eq)
            || !finite(&self.a_ub)
            || !self.c.iter().all(|v| v.is_finite())
            || !self.b_eq.iter().all(|v| v.is_finite())
            || !self.b_ub.iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput("LP data must be finite".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(alloc::format!("empty bounds on variable {j}")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &Vector) -> f64 {
        let mut worst = 0.0_f64;
        if self.a_eq.nrows() > 0 {
            worst = worst.max((&self.a_eq * x - &self.b_eq).amax());
        }
        if self.a_ub.nrows() > 0 {
            let r = &self.a_ub * x - &self.b_ub;
            worst = worst.max(r.iter().cloned().fold(0.0, f64::max));
        }
        for j in 0..x.len() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit or a failed consistency check.
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vector,
    pub objective: f64,
    /// Multipliers of the equality rows, then the inequality rows
    /// (nonpositive at an optimum for `≤` rows).
    pub duals: Vector,
    /// `|cᵀx − dual objective| / (1 + |cᵀx|)` at an optimum.
    pub duality_gap: f64,
    pub primal_violation: f64,
    /// Largest reduced-cost violation at the reported basis.
    pub dual_violation: f64,
    /// Unbounded ray in the original variables, or a Farkas vector `y` over
    /// the equality rows, inequality rows and finite upper bounds with
    /// `Aᵀy ≤ 0`, `bᵀy > 0` in the internal standard form.
    pub certificate: Option<Vector>,
    pub iterations: usize,
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub pivot_tol: f64,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            max_iter: 200_000,
            degenerate_limit: 50,
        }
    }
}

/// How an original variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = l + s`, `s ≥ 0`.
    Shifted { col: usize, lower: f64 },
    /// `x = u − s`, `s ≥ 0`.
    Mirrored { col: usize, upper: f64 },
    /// `x = s`, `s` free.
    Free { col: usize },
}

struct Standard {
    a: Mat,
    b: Vector,
    c: Vector,
    free: Vec<bool>,
    offset: f64,
    /// Sign applied to each row (equality, inequality, bound rows).
    row_sign: Vec<f64>,
    /// Column that can start basic for a row (slack with +1), if any.
    start_basic: Vec<Option<usize>>,
    vars: Vec<VarMap>,
    n_eq: usize,
    n_ub: usize,
}

fn to_standard(p: &LpProblem) -> Standard {
    let n = p.num_vars();
    let mut vars = Vec::with_capacity(n);
    let mut bound_rows = Vec::new();
    let mut free = Vec::with_capacity(n);
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j]);
        if l.is_finite() {
            vars.push(VarMap::Shifted { col: j, lower: l });
            if u.is_finite() {
                bound_rows.push((j, u - l));
            }
            free.push(false);
        } else if u.is_finite() {
            vars.push(VarMap::Mirrored { col: j, upper: u });
            free.push(false);
        } else {
            vars.push(VarMap::Free { col: j });
            free.push(true);
        }
    }
    let n_eq = p.a_eq.nrows();
    let n_ub = p.a_ub.nrows();
    let n_ineq = n_ub + bound_rows.len();
    let m = n_eq + n_ineq;
    let total = n + n_ineq;
    free.resize(total, false);
    let mut a = Mat::zeros(m, total);
    let mut b = Vector::zeros(m);
    let mut c = Vector::zeros(total);
    let mut offset = 0.0;

    let place = |a: &mut Mat, b: &mut Vector, row: usize, j: usize, v: f64| match vars[j] {
        VarMap::Shifted { col, lower } => {
            a[(row, col)] += v;
            b[row] -= v * lower;
        }
        VarMap::Mirrored { col, upper } => {
            a[(row, col)] -= v;
            b[row] -= v * upper;
        }
        VarMap::Free { col } => a[(row, col)] += v,
    };
    for i in 0..n_eq {
        b[i] = p.b_eq[i];
        for j in 0..n {
            let v = p.a_eq[(i, j)];
            if v != 0.0 {
                place(&mut a, &mut b, i, j, v);
            }
        }
    }
    for i in 0..n_ub {
        let row = n_eq + i;
        b[row] = p.b_ub[i];
        for j in 0..n {
            let v = p.a_ub[(i, j)];
            if v != 0.0 {
                place(&mut a, &mut b, row, j, v);
            }
        }
    }
    for (k, (col, width)) in bound_rows.iter().enumerate() {
        let row = n_eq + n_ub + k;
        a[(row, *col)] = 1.0;
        b[row] = *width;
    }
    for i in 0..n_ineq {
        a[(n_eq + i, n + i)] = 1.0;
    }
    for j in 0..n {
        let cj = p.c[j];
        match vars[j] {
            VarMap::Shifted { col, lower } => {
                c[col] += cj;
                offset += cj * lower;
            }
            VarMap::Mirrored { col, upper } => {
                c[col] -= cj;
                offset += cj * upper;
            }
            VarMap::Free { col } => c[col] += cj,
        }
    }
    let mut row_sign = vec![1.0; m];
    let mut start_basic = vec![None; m];
    for i in 0..m {
        if b[i] < 0.0 {
            row_sign[i] = -1.0;
            b[i] = -b[i];
            for j in 0..total {
                a[(i, j)] = -a[(i, j)];
            }
        } else if i >= n_eq {
            start_basic[i] = Some(n + (i - n_eq));
        }
    }
    Standard {
        a,
        b,
        c,
        free,
        offset,
        row_sign,
        start_basic,
        vars,
        n_eq,
        n_ub,
    }
}

/// Basis entry: a structural column or the artificial of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basic {
    Col(usize),
    Art(usize),
}

struct Tableau {
    m: usize,
    n: usize,
    /// Row-major `m × (n + 1)`; last column is the right-hand side.
    t: Vec<f64>,
    basis: Vec<Basic>,
    active: Vec<bool>,
    free: Vec<bool>,
    /// Columns negated so that free variables move in the positive direction.
    flip: Vec<f64>,
    /// Reduced costs and objective value of the current phase.
    d: Vec<f64>,
    obj: f64,
    iterations: usize,
}

impl Tableau {
    fn from_standard(s: &Standard) -> Self {
        let (m, n) = (s.a.nrows(), s.a.ncols());
        let w = n + 1;
        let mut t = vec![0.0; m * w];
        for i in 0..m {
            for j in 0..n {
                t[i * w + j] = s.a[(i, j)];
            }
            t[i * w + n] = s.b[i];
        }
        let basis = (0..m)
            .map(|i| s.start_basic[i].map_or(Basic::Art(i), Basic::Col))
            .collect();
        Self {
            m,
            n,
            t,
            basis,
            active: vec![true; m],
            free: s.free.clone(),
            flip: vec![1.0; n],
            d: vec![0.0; n],
            obj: 0.0,
            iterations: 0,
        }
    }

    fn in_basis(&self) -> Vec<bool> {
        let mut out = vec![false; self.n];
        for (i, b) in self.basis.iter().enumerate() {
            if let (Basic::Col(j), true) = (b, self.active[i]) {
                out[*j] = true;
            }
        }
        out
    }

    /// Sets reduced costs for costs `c` (unflipped) on structural columns and
    /// `art_cost` on artificials.
    fn price(&mut self, c: &[f64], art_cost: f64) {
        let w = self.n + 1;
        let cf: Vec<f64> = c.iter().zip(&self.flip).map(|(c, f)| c * f).collect();
        let mut d = cf.clone();
        let mut obj = 0.0;
        for i in 0..self.m {
            if !self.active[i] {
                continue;
            }
            let cb = match self.basis[i] {
                Basic::Col(j) => cf[j],
                Basic::Art(_) => art_cost,
            };
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * w..(i + 1) * w];
            for j in 0..self.n {
                d[j] -= cb * row[j];
            }
            obj += cb * row[self.n];
        }
        for i in 0..self.m {
            if let (Basic::Col(j), true) = (self.basis[i], self.active[i]) {
                d[j] = 0.0;
            }
        }
        self.d = d;
        self.obj = obj;
    }

    fn negate_column(&mut self, j: usize) {
        let w = self.n + 1;
        for i in 0..self.m {
            self.t[i * w + j] = -self.t[i * w + j];
        }
        self.d[j] = -self.d[j];
        self.flip[j] = -self.flip[j];
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.n + 1;
        let inv = 1.0 / self.t[r * w + s];
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[s] = 1.0;
        }
        let nz: Vec<usize> = (0..w).filter(|&j| self.t[r * w + j] != 0.0).collect();
        let prow: Vec<f64> = nz.iter().map(|&j| self.t[r * w + j]).collect();
        for i in 0..self.m {
            if i == r || !self.active[i] {
                continue;
            }
            let f = self.t[i * w + s];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for (k, &j) in nz.iter().enumerate() {
                row[j] -= f * prow[k];
            }
            row[s] = 0.0;
        }
        let f = self.d[s];
        if f != 0.0 {
            for (k, &j) in nz.iter().enumerate() {
                if j < self.n {
                    self.d[j] -= f * prow[k];
                } else {
                    self.obj += f * prow[k];
                }
            }
            self.d[s] = 0.0;
        }
        self.basis[r] = Basic::Col(s);
        self.iterations += 1;
    }

    /// Runs simplex iterations on the current reduced costs.
    /// Returns `Ok(None)` at optimality or `Ok(Some(col))` when `col` is an
    /// unbounded direction.
    fn iterate(&mut self, opts: &LpOptions) -> Result<Option<usize>> {
        let w = self.n + 1;
        let mut in_basis = self.in_basis();
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= opts.max_iter {
                return Err(Error::Numerical {
                    message: "simplex iteration limit reached".into(),
                    condition: f64::NAN,
                });
            }
            let bland = degenerate_run >= opts.degenerate_limit;
            let mut enter = None;
            let mut best = opts.opt_tol;
            for j in 0..self.n {
                if in_basis[j] {
                    continue;
                }
                let gain = if self.free[j] { self.d[j].abs() } else { -self.d[j] };
                if gain > best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = gain;
                }
            }
            let s = match enter {
                None => return Ok(None),
                Some(s) => s,
            };
            if self.d[s] > 0.0 {
                self.negate_column(s);
            }
            // Ratio test over rows whose basic variable is sign constrained;
            // ties prefer artificials leaving, then larger pivots (or lowest
            // basis index under Bland's rule).
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                if !self.active[i] {
                    continue;
                }
                if let Basic::Col(j) = self.basis[i] {
                    if self.free[j] {
                        continue;
                    }
                }
                let a = self.t[i * w + s];
                if a <= opts.pivot_tol {
                    continue;
                }
                let ratio = self.t[i * w + self.n].max(0.0) / a;
                let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                let better = match leave {
                    None => true,
                    Some(_) if ratio < best_ratio && !tie => true,
                    Some(l) if tie => {
                        let cur_art = matches!(self.basis[l], Basic::Art(_));
                        let new_art = matches!(self.basis[i], Basic::Art(_));
                        if new_art != cur_art {
                            new_art
                        } else if bland {
                            basis_key(self.basis[i]) < basis_key(self.basis[l])
                        } else {
                            a > self.t[l * w + s]
                        }
                    }
                    _ => false,
                };
                if better {
                    leave = Some(i);
                    best_ratio = best_ratio.min(ratio);
                }
            }
            let r = match leave {
                None => return Ok(Some(s)),
                Some(r) => r,
            };
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            if let Basic::Col(old) = self.basis[r] {
                in_basis[old] = false;
            }
            self.pivot(r, s);
            in_basis[s] = true;
        }
    }
}

fn basis_key(b: Basic) -> usize {
    match b {
        Basic::Col(j) => j,
        Basic::Art(i) => usize::MAX / 2 + i,
    }
}

/// Basis refactorized from the original standard-form data.
struct Polished {
    /// Standard-form point (unflipped).
    x: Vector,
    y: Vector,
    reduced: Vector,
}

fn basis_matrix(s: &Standard, tab: &Tableau, rows: &[usize]) -> DMatrix<f64> {
    let k = rows.len();
    let mut bmat = DMatrix::<f64>::zeros(k, k);
    for (col, &i) in rows.iter().enumerate() {
        match tab.basis[i] {
            Basic::Col(j) => {
                for (r, &ri) in rows.iter().enumerate() {
                    bmat[(r, col)] = s.a[(ri, j)] * tab.flip[j];
                }
            }
            Basic::Art(a) => {
                if let Some(r) = rows.iter().position(|&ri| ri == a) {
                    bmat[(r, col)] = 1.0;
                }
            }
        }
    }
    bmat
}

fn polish(s: &Standard, tab: &Tableau, c: &Vector, art_cost: f64) -> Option<Polished> {
    let rows: Vec<usize> = (0..tab.m).filter(|&i| tab.active[i]).collect();
    let k = rows.len();
    let bmat = basis_matrix(s, tab, &rows);
    let cb = Vector::from_fn(k, |col, _| match tab.basis[rows[col]] {
        Basic::Col(j) => c[j] * tab.flip[j],
        Basic::Art(_) => art_cost,
    });
    let bb = Vector::from_fn(k, |r, _| s.b[rows[r]]);
    let xb = bmat.clone().lu().solve(&bb)?;
    let y_act = bmat.transpose().lu().solve(&cb)?;
    let n = s.a.ncols();
    let mut x = Vector::zeros(n);
    for (col, &i) in rows.iter().enumerate() {
        if let Basic::Col(j) = tab.basis[i] {
            x[j] = xb[col] * tab.flip[j];
        }
    }
    let mut y = Vector::zeros(tab.m);
    for (r, &ri) in rows.iter().enumerate() {
        y[ri] = y_act[r];
    }
    let reduced = c - s.a.transpose() * &y;
    Some(Polished { x, y, reduced })
}

/// Recomputes the tableau as `B⁻¹[A | b]` for the current basis.
fn rebuild(s: &Standard, tab: &mut Tableau) -> bool {
    let rows: Vec<usize> = (0..tab.m).filter(|&i| tab.active[i]).collect();
    if rows.iter().any(|&i| matches!(tab.basis[i], Basic::Art(_))) {
        return false;
    }
    let lu = basis_matrix(s, tab, &rows).lu();
    let w = tab.n + 1;
    let mut rhs = DMatrix::<f64>::zeros(rows.len(), w);
    for (r, &ri) in rows.iter().enumerate() {
        for j in 0..tab.n {
            rhs[(r, j)] = s.a[(ri, j)] * tab.flip[j];
        }
        rhs[(r, tab.n)] = s.b[ri];
    }
    let sol = match lu.solve(&rhs) {
        Some(v) => v,
        None => return false,
    };
    for (r, &ri) in rows.iter().enumerate() {
        for j in 0..w {
            tab.t[ri * w + j] = sol[(r, j)];
        }
    }
    true
}

fn recover_x(s: &Standard, xs: &Vector) -> Vector {
    Vector::from_fn(s.vars.len(), |j, _| match s.vars[j] {
        VarMap::Shifted { col, lower } => lower + xs[col],
        VarMap::Mirrored { col, upper } => upper - xs[col],
        VarMap::Free { col } => xs[col],
    })
}

fn recover_direction(s: &Standard, ds: &Vector) -> Vector {
    Vector::from_fn(s.vars.len(), |j, _| match s.vars[j] {
        VarMap::Shifted { col, .. } | VarMap::Free { col } => ds[col],
        VarMap::Mirrored { col, .. } => -ds[col],
    })
}

/// Optimality of a polished basis: sign-constrained columns need
/// nonnegative reduced costs, free columns zero ones.
fn dual_violation(s: &Standard, reduced: &Vector) -> f64 {
    reduced
        .iter()
        .zip(&s.free)
        .map(|(r, f)| if *f { r.abs() } else { (-r).max(0.0) })
        .fold(0.0, f64::max)
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(problem, &LpOptions::default())
}

pub fn solve_lp_with(problem: &LpProblem, opts: &LpOptions) -> Result<LpSolution> {
    problem.validate()?;
    let s = to_standard(problem);
    let mut tab = Tableau::from_standard(&s);
    let n = tab.n;
    let n_orig = problem.num_vars();
    let empty = |status, iterations| LpSolution {
        status,
        x: Vector::zeros(n_orig),
        objective: f64::NAN,
        duals: Vector::zeros(s.n_eq + s.n_ub),
        duality_gap: f64::NAN,
        primal_violation: f64::NAN,
        dual_violation: f64::NAN,
        certificate: None,
        iterations,
    };

    // Phase 1: minimise the sum of artificials.
    let scale = 1.0 + s.b.amax();
    if tab.basis.iter().any(|b| matches!(b, Basic::Art(_))) {
        tab.price(&vec![0.0; n], 1.0);
        if tab.iterate(opts).is_err() {
            return Ok(empty(LpStatus::NumericalFailure, tab.iterations));
        }
        if tab.obj > opts.feas_tol * scale {
            let mut out = empty(LpStatus::Infeasible, tab.iterations);
            if let Some(p) = polish(&s, &tab, &Vector::zeros(n), 1.0) {
                // Phase-1 duals separate b from the cone generated by A.
                out.certificate = Some(Vector::from_fn(p.y.len(), |i, _| p.y[i] * s.row_sign[i]));
            }
            return Ok(out);
        }
        // Drive zero-level artificials out, dropping redundant rows.
        let w = n + 1;
        for i in 0..tab.m {
            if !matches!(tab.basis[i], Basic::Art(_)) {
                continue;
            }
            let in_basis = tab.in_basis();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                let v = tab.t[i * w + j].abs();
                if !in_basis[j] && v > opts.pivot_tol && best.map_or(true, |(_, bv)| v > bv) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, _)) => tab.pivot(i, j),
                None => tab.active[i] = false,
            }
        }
    }

    // Phase 2, with refactorization whenever drift leaves the polished basis
    // infeasible or non-optimal.
    let c: Vec<f64> = s.c.iter().cloned().collect();
    tab.price(&c, 0.0);
    let cscale = 1.0 + s.c.amax();
    let mut ray_col = None;
    let mut status = LpStatus::NumericalFailure;
    for _round in 0..4 {
        match tab.iterate(opts) {
            Ok(None) => {}
            Ok(Some(col)) => {
                status = LpStatus::Unbounded;
                ray_col = Some(col);
                break;
            }
            Err(_) => break,
        }
        let p = match polish(&s, &tab, &s.c, 0.0) {
            Some(p) => p,
            None => break,
        };
        let primal_ok = p.x.iter().zip(&s.free).all(|(v, f)| *f || *v >= -opts.feas_tol * scale);
        if primal_ok && dual_violation(&s, &p.reduced) <= opts.opt_tol * cscale {
            status = LpStatus::Optimal;
            break;
        }
        if !rebuild(&s, &mut tab) {
            break;
        }
        tab.price(&c, 0.0);
    }

    match status {
        LpStatus::Unbounded => {
            let s_col = ray_col.expect("set with status");
            let w = n + 1;
            let mut d = Vector::zeros(n);
            d[s_col] = tab.flip[s_col];
            for i in 0..tab.m {
                if let (Basic::Col(j), true) = (tab.basis[i], tab.active[i]) {
                    d[j] = -tab.t[i * w + s_col] * tab.flip[j];
                }
            }
            let mut out = empty(LpStatus::Unbounded, tab.iterations);
            out.certificate = Some(recover_direction(&s, &d));
            Ok(out)
        }
        LpStatus::Optimal => {
            let p = polish(&s, &tab, &s.c, 0.0).expect("polished above");
            let x = recover_x(&s, &p.x);
            let primal = s.c.dot(&p.x);
            let dual = s.b.dot(&p.y);
            let m_orig = s.n_eq + s.n_ub;
            Ok(LpSolution {
                status,
                primal_violation: problem.max_violation(&x),
                x,
                objective: primal + s.offset,
                duals: Vector::from_fn(m_orig, |i, _| p.y[i] * s.row_sign[i]),
                duality_gap: (primal - dual).abs() / (1.0 + primal.abs()),
                dual_violation: dual_violation(&s, &p.reduced),
                certificate: None,
                iterations: tab.iterations,
            })
        }
        other => Ok(empty(other, tab.iterations)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_from_rows;

    #[test]
    fn single_lower_bound() {
        // min x s.t. x ≥ 3
        let mut p = LpProblem::new(Vector::from_element(1, 1.0));
        p.a_ub = Mat::from_element(1, 1, -1.0);
        p.b_ub = Vector::from_element(1, -3.0);
        p.lower[0] = f64::NEG_INFINITY;
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!(s.duality_gap <= 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // x ≤ 0 and x ≥ 1
        let mut p = LpProblem::new(Vector::from_element(1, 0.0));
        p.lower[0] = f64::NEG_INFINITY;
        p.a_ub = mat_from_rows(&[&[1.0], &[-1.0]]);
        p.b_ub = Vector::from_row_slice(&[0.0, -1.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.certificate.is_some());
    }

    #[test]
    fn unbounded_ray() {
        // min −x − y s.t. x − y ≤ 1
        let mut p = LpProblem::new(Vector::from_row_slice(&[-1.0, -1.0]));
        p.a_ub = mat_from_rows(&[&[1.0, -1.0]]);
        p.b_ub = Vector::from_element(1, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        let d = s.certificate.unwrap();
        assert!(p.c.dot(&d) < 0.0);
        assert!((&p.a_ub * &d)[0] <= 1e-12);
        assert!(d.iter().all(|v| *v >= -1e-12));
    }

    #[test]
    fn free_variables_and_equalities() {
        // min |x − 2| + |y + 1| written with splits; optimum 0 at (2, −1).
        let c = Vector::from_row_slice(&[0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let mut p = LpProblem::new(c);
        p.lower[0] = f64::NEG_INFINITY;
        p.lower[1] = f64::NEG_INFINITY;
        p.a_eq = mat_from_rows(&[
            &[1.0, 0.0, -1.0, 1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0, -1.0, 1.0],
            &[2.0, 2.0, -2.0, 2.0, -2.0, 2.0],
        ]);
        p.b_eq = Vector::from_row_slice(&[2.0, -1.0, 2.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.objective.abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn upper_bounds_and_mirrored_variables() {
        // max x + y with x ≤ 2, y ∈ (−∞, 3], x + y ≤ 4.5
        let mut p = LpProblem::new(Vector::from_row_slice(&[-1.0, -1.0]));
        p.upper[0] = 2.0;
        p.lower[1] = f64::NEG_INFINITY;
        p.upper[1] = 3.0;
        p.a_ub = mat_from_rows(&[&[1.0, 1.0]]);
        p.b_ub = Vector::from_element(1, 4.5);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 4.5).abs() < 1e-12);
        assert!(s.primal_violation <= 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under textbook Dantzig pricing.
        let c = Vector::from_row_slice(&[-0.75, 150.0, -0.02, 6.0]);
        let mut p = LpProblem::new(c);
        p.a_ub = mat_from_rows(&[
            &[0.25, -60.0, -0.04, 9.0],
            &[0.5, -90.0, -0.02, 3.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        p.b_ub = Vector::from_row_slice(&[0.0, 0.0, 1.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-12);
    }
}
