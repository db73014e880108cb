//! L1-optimal synthesis over FIR responses as a linear program.
//!
//! Tracking is handled in the error coordinates `e = x − Eρ`. When
//! `(A − I)E = 0` the error obeys `e⁺ = Ae + Bu + H_e ω` with
//! `H_e = [σ_w I, −ΔE]` and the shifted measurement `y − CEρ = Ce + η`, so the
//! reference block of the augmented loop never has to be closed by an FIR map.
//! The decision variables are the input responses `U(k) = [Φ_uw(k) Φ_un(k)]`;
//! state responses follow from `X(k+1) = AX(k) + BU(k) + δ_k0 [I 0]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::augment::{error_disturbance, AugmentedSystem};
use super::constraints::{assemble_sls_constraints, SlsResponses};
use super::lp::{solve_lp, LpProblem, LpStatus};
use super::realize::Realization;
use crate::error::{Error, Result};
use crate::lin_sys::{FirOperator, LinearSystem};
use crate::linalg::{self, Mat, Vector};

/// Largest achievability residual accepted from the LP.
pub const RESIDUAL_TOL: f64 = 1e-7;
/// Largest relative duality gap accepted from the LP.
pub const GAP_TOL: f64 = 1e-8;

/// Responses of the error loop plus the data needed to run and evaluate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedController {
    sys: LinearSystem,
    /// Responses to unscaled process disturbance and measurement noise.
    pub responses: SlsResponses,
    pub embedding: Mat,
    pub h_e: Mat,
    pub q_sqrt: Mat,
    pub r_sqrt: Mat,
    /// Weight applied to the noise channel in the objective.
    pub noise_scale: f64,
    pub objective: f64,
    pub residual: f64,
    pub duality_gap: f64,
    pub lp_iterations: usize,
}

impl SynthesizedController {
    pub fn system(&self) -> &LinearSystem {
        &self.sys
    }

    pub fn horizon(&self) -> usize {
        self.responses.horizon()
    }

    /// Online feedback law for the error measurement `y − CEρ`.
    pub fn realize(&self) -> Realization {
        Realization::new(&self.responses)
    }

    /// `‖[Q^{1/2} 0; 0 R^{1/2}] Φ [H_e 0; 0 εI]‖_L1`.
    pub fn weighted_norm(&self, eps: f64) -> f64 {
        let r = &self.responses;
        let top = FirOperator::hstack(&[
            &r.phi_xw.right_mul(&self.h_e).expect("shapes fixed at synthesis"),
            &r.phi_xn.scale(eps),
        ])
        .expect("equal horizons")
        .left_mul(&self.q_sqrt)
        .expect("shapes fixed at synthesis");
        let bottom = FirOperator::hstack(&[
            &r.phi_uw.right_mul(&self.h_e).expect("shapes fixed at synthesis"),
            &r.phi_un.scale(eps),
        ])
        .expect("equal horizons")
        .left_mul(&self.r_sqrt)
        .expect("shapes fixed at synthesis");
        FirOperator::vstack(&[&top, &bottom]).expect("equal widths").l1_norm()
    }

    /// `‖[Q^{1/2}Φ_xn; R^{1/2}Φ_un]‖_L1`, the perception-error gain of the cost.
    pub fn noise_cost_gain(&self) -> f64 {
        let r = &self.responses;
        FirOperator::vstack(&[
            &r.phi_xn.left_mul(&self.q_sqrt).expect("shapes fixed at synthesis"),
            &r.phi_un.left_mul(&self.r_sqrt).expect("shapes fixed at synthesis"),
        ])
        .expect("equal widths")
        .l1_norm()
    }

    /// `‖CΦ_xn‖_L1`.
    pub fn output_noise_gain(&self) -> f64 {
        self.responses
            .phi_xn
            .left_mul(self.sys.c())
            .expect("shapes fixed at synthesis")
            .l1_norm()
    }

    /// `‖CΦ_xw H‖_L1` for a disturbance matrix `H`.
    pub fn output_disturbance_gain(&self, h: &Mat) -> Result<f64> {
        Ok(self.responses.phi_xw.right_mul(h)?.left_mul(self.sys.c())?.l1_norm())
    }
}

/// Radius that `‖Cx‖_∞` stays within under exact perception.
pub fn r_max_of_responses(ctrl: &SynthesizedController, r_max_ref: f64, delta: f64, sigma_w: f64) -> Result<f64> {
    let h = error_disturbance(&ctrl.embedding, sigma_w, delta);
    Ok(r_max_ref + ctrl.output_disturbance_gain(&h)?)
}

/// Minimises the weighted L1 norm with noise channel scale `eps`.
pub fn sls_synthesize(aug: &AugmentedSystem, q: &Mat, r: &Mat, horizon: usize, eps: f64) -> Result<SynthesizedController> {
    synthesize(aug, q, r, horizon, eps, None)
}

/// As [`sls_synthesize`] with the escape constraint
/// `‖CΦ_xw H_e‖_L1 + ε_h‖CΦ_xn‖_L1 ≤ r − r_max_ref`.
pub fn robust_sls_synthesize(
    aug: &AugmentedSystem,
    q: &Mat,
    r: &Mat,
    horizon: usize,
    eps_h: f64,
    radius: f64,
    r_max_ref: f64,
) -> Result<SynthesizedController> {
    if !(radius > r_max_ref) {
        return Err(Error::InvalidInput(format!(
            "radius {radius} must exceed the reference bound {r_max_ref}"
        )));
    }
    synthesize(aug, q, r, horizon, eps_h, Some(radius - r_max_ref)).map_err(|e| match e {
        Error::Infeasible(_) => Error::Infeasible(format!(
            "no FIR response keeps ‖Cx‖∞ ≤ {radius} with perception error {eps_h} \
             (r_max_ref = {r_max_ref}); the escape constraint is unsatisfiable"
        )),
        other => other,
    })
}

/// Sparse affine expression in the LP variables.
#[derive(Debug, Clone, Default)]
struct Affine {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Affine {
    fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }
}

#[derive(Debug, Default)]
struct Builder {
    ncols: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    eq: Vec<(Vec<(usize, f64)>, f64)>,
    ub: Vec<(Vec<(usize, f64)>, f64)>,
}

impl Builder {
    fn var(&mut self, lower: f64, cost: f64) -> usize {
        self.ncols += 1;
        self.cost.push(cost);
        self.lower.push(lower);
        self.ncols - 1
    }

    /// Adds `|expr|` split variables for every expression of each output row
    /// and returns one epigraph variable bounding the row sums.
    fn l1_epigraph(&mut self, rows: &[Vec<Affine>], cost: f64) -> usize {
        let t = self.var(0.0, cost);
        for exprs in rows {
            let mut sum = Vec::new();
            for e in exprs {
                if e.is_zero() {
                    continue;
                }
                let pos = self.var(0.0, 0.0);
                let neg = self.var(0.0, 0.0);
                let mut terms = vec![(pos, 1.0), (neg, -1.0)];
                terms.extend(e.terms.iter().map(|(i, c)| (*i, -c)));
                self.eq.push((terms, e.constant));
                sum.push((pos, 1.0));
                sum.push((neg, 1.0));
            }
            sum.push((t, -1.0));
            self.ub.push((sum, 0.0));
        }
        t
    }

    fn finish(self) -> LpProblem {
        let n = self.ncols;
        let dense = |rows: &[(Vec<(usize, f64)>, f64)]| {
            let mut a = Mat::zeros(rows.len(), n);
            let mut b = Vector::zeros(rows.len());
            for (i, (terms, rhs)) in rows.iter().enumerate() {
                for (j, c) in terms {
                    a[(i, *j)] += c;
                }
                b[i] = *rhs;
            }
            (a, b)
        };
        let (a_eq, b_eq) = dense(&self.eq);
        let (a_ub, b_ub) = dense(&self.ub);
        LpProblem {
            c: Vector::from_vec(self.cost),
            a_eq,
            b_eq,
            a_ub,
            b_ub,
            lower: Vector::from_vec(self.lower),
            upper: Vector::from_element(n, f64::INFINITY),
        }
    }
}

/// Indices of the `U(k)` entries; `Φ_uw(0)` is fixed at zero.
struct UVars {
    m: usize,
    n: usize,
    width: usize,
    index: Vec<Option<usize>>,
}

impl UVars {
    fn new(b: &mut Builder, m: usize, n: usize, p: usize, horizon: usize) -> Self {
        let width = n + p;
        let mut index = Vec::with_capacity((horizon + 1) * m * width);
        for k in 0..=horizon {
            for _a in 0..m {
                for col in 0..width {
                    index.push(if k == 0 && col < n {
                        None
                    } else {
                        Some(b.var(f64::NEG_INFINITY, 0.0))
                    });
                }
            }
        }
        Self { m, n, width, index }
    }

    fn get(&self, k: usize, a: usize, col: usize) -> Option<usize> {
        self.index[(k * self.m + a) * self.width + col]
    }
}

/// `M X(k) D` and `M U(k) D` entries as affine expressions in `U`.
struct Expressions<'a> {
    u: &'a UVars,
    /// `A^s B` for `s = 0..=H`.
    apb: Vec<Mat>,
    /// `A^s` for `s = 0..=H`.
    ap: Vec<Mat>,
}

impl Expressions<'_> {
    /// Rows of `M X(k) D` for `k = 1..=H`, grouped by the rows of `M`.
    fn state_rows(&self, weight: &Mat, d: &Mat, horizon: usize) -> Vec<Vec<Affine>> {
        let n = self.u.n;
        let mut out = vec![Vec::new(); weight.nrows()];
        let x0_sel = linalg::stack_cols(&[&Mat::identity(n, n), &Mat::zeros(n, self.u.width - n)]);
        for k in 1..=horizon {
            let constant = weight * &self.ap[k - 1] * &x0_sel * d;
            // Coefficient of U(j)[a, b] in (M X(k) D)[r, c] is G[r, a]·D[b, c]
            // with G = M A^{k−1−j} B.
            let gs: Vec<Mat> = (0..k).map(|j| weight * &self.apb[k - 1 - j]).collect();
            for r in 0..weight.nrows() {
                for c in 0..d.ncols() {
                    let mut terms = Vec::new();
                    for (j, g) in gs.iter().enumerate() {
                        for a in 0..self.u.m {
                            let ga = g[(r, a)];
                            if ga == 0.0 {
                                continue;
                            }
                            for b in 0..self.u.width {
                                let db = d[(b, c)];
                                if db == 0.0 {
                                    continue;
                                }
                                if let Some(ix) = self.u.get(j, a, b) {
                                    terms.push((ix, ga * db));
                                }
                            }
                        }
                    }
                    out[r].push(Affine {
                        terms,
                        constant: constant[(r, c)],
                    });
                }
            }
        }
        out
    }

    /// Rows of `M U(k) D` for `k = 0..=H`.
    fn input_rows(&self, weight: &Mat, d: &Mat, horizon: usize) -> Vec<Vec<Affine>> {
        let mut out = vec![Vec::new(); weight.nrows()];
        for k in 0..=horizon {
            for r in 0..weight.nrows() {
                for c in 0..d.ncols() {
                    let mut terms = Vec::new();
                    for a in 0..self.u.m {
                        let wa = weight[(r, a)];
                        if wa == 0.0 {
                            continue;
                        }
                        for b in 0..self.u.width {
                            let db = d[(b, c)];
                            if db == 0.0 {
                                continue;
                            }
                            if let Some(ix) = self.u.get(k, a, b) {
                                terms.push((ix, wa * db));
                            }
                        }
                    }
                    out[r].push(Affine { terms, constant: 0.0 });
                }
            }
        }
        out
    }
}

fn synthesize(
    aug: &AugmentedSystem,
    q: &Mat,
    r: &Mat,
    horizon: usize,
    eps: f64,
    escape_budget: Option<f64>,
) -> Result<SynthesizedController> {
    if horizon == 0 {
        return Err(Error::InvalidInput("FIR horizon must be at least 1".into()));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidInput(format!("noise scale must be nonnegative, got {eps}")));
    }
    aug.check_reference_drift()?;
    let sys = aug.system();
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let q_sqrt = linalg::diag_sqrt(q)?;
    let r_sqrt = linalg::diag_sqrt(r)?;
    let h_e = aug.error_disturbance();
    let d = linalg::block_diag(&[&h_e, &(Mat::identity(p, p) * eps)]);

    let mut b = Builder::default();
    let u = UVars::new(&mut b, m, n, p, horizon);
    let ap = linalg::powers(sys.a(), horizon);
    let apb: Vec<Mat> = ap.iter().map(|a| a * sys.b()).collect();
    let ex = Expressions { u: &u, apb, ap };

    // Input rows of the second identity:
    // Φ_uw(k+1) − Φ_uw(k)A − Φ_un(k)C = 0 for k = 0..=H.
    for k in 0..=horizon {
        for a in 0..m {
            for j in 0..n {
                let mut terms = Vec::new();
                if k < horizon {
                    if let Some(ix) = u.get(k + 1, a, j) {
                        terms.push((ix, 1.0));
                    }
                }
                for l in 0..n {
                    let v = sys.a()[(l, j)];
                    if v != 0.0 {
                        if let Some(ix) = u.get(k, a, l) {
                            terms.push((ix, -v));
                        }
                    }
                }
                for l in 0..p {
                    let v = sys.c()[(l, j)];
                    if v != 0.0 {
                        if let Some(ix) = u.get(k, a, n + l) {
                            terms.push((ix, -v));
                        }
                    }
                }
                b.eq.push((terms, 0.0));
            }
        }
    }
    // Terminal condition X(H+1) = A^H [I 0] + Σ_j A^{H−j} B U(j) = 0.
    for i in 0..n {
        for col in 0..n + p {
            let mut terms = Vec::new();
            for j in 0..=horizon {
                let g = &ex.apb[horizon - j];
                for a in 0..m {
                    if g[(i, a)] != 0.0 {
                        if let Some(ix) = u.get(j, a, col) {
                            terms.push((ix, g[(i, a)]));
                        }
                    }
                }
            }
            let constant = if col < n { ex.ap[horizon][(i, col)] } else { 0.0 };
            b.eq.push((terms, -constant));
        }
    }

    // Objective epigraph over all weighted output rows.
    let mut rows = ex.state_rows(&q_sqrt, &d, horizon);
    rows.extend(ex.input_rows(&r_sqrt, &d, horizon));
    rows.retain(|r| r.iter().any(|e| !e.is_zero()));
    b.l1_epigraph(&rows, 1.0);

    if let Some(budget) = escape_budget {
        let c = sys.c();
        let dw = linalg::block_diag(&[&h_e, &Mat::zeros(p, 0)]);
        let dn = linalg::stack_rows(&[&Mat::zeros(n, p), &Mat::identity(p, p)]);
        let t1 = b.l1_epigraph(&ex.state_rows(c, &dw, horizon), 0.0);
        let t2 = b.l1_epigraph(&ex.state_rows(c, &dn, horizon), 0.0);
        b.ub.push((vec![(t1, 1.0), (t2, eps)], budget));
    }

    let lp = b.finish();
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "no FIR response of horizon {horizon} satisfies the achievability constraints; \
                 increase the horizon"
            )))
        }
        LpStatus::Unbounded => {
            return Err(Error::Unbounded(
                "L1 objective is unbounded below; check the cost weights and model".into(),
            ))
        }
        LpStatus::NumericalFailure => {
            return Err(Error::Numerical {
                message: "simplex failed to converge on the synthesis program".into(),
                condition: f64::NAN,
            })
        }
    }
    if sol.duality_gap > GAP_TOL {
        return Err(Error::Numerical {
            message: format!("duality gap {:.3e} exceeds {GAP_TOL:e}", sol.duality_gap),
            condition: f64::NAN,
        });
    }

    let responses = responses_from_inputs(sys, &u, &sol.x, horizon)?;
    let residual = assemble_sls_constraints(sys, horizon).residual(&responses);
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical {
            message: format!("achievability residual {residual:.3e} exceeds {RESIDUAL_TOL:e}"),
            condition: f64::NAN,
        });
    }
    let ctrl = SynthesizedController {
        sys: sys.clone(),
        responses,
        embedding: aug.embedding().clone(),
        h_e,
        q_sqrt,
        r_sqrt,
        noise_scale: eps,
        objective: sol.objective,
        residual,
        duality_gap: sol.duality_gap,
        lp_iterations: sol.iterations,
    };
    let replay = ctrl.weighted_norm(eps);
    if (replay - sol.objective).abs() > 1e-7 * (1.0 + replay) {
        return Err(Error::Numerical {
            message: format!("LP objective {} disagrees with the response norm {replay}", sol.objective),
            condition: f64::NAN,
        });
    }
    Ok(ctrl)
}

fn responses_from_inputs(sys: &LinearSystem, u: &UVars, x: &Vector, horizon: usize) -> Result<SlsResponses> {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let width = n + p;
    let mut us = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        us.push(Mat::from_fn(m, width, |a, col| u.get(k, a, col).map_or(0.0, |ix| x[ix])));
    }
    let mut xs = vec![Mat::zeros(n, width)];
    let mut prev = linalg::stack_cols(&[&Mat::identity(n, n), &Mat::zeros(n, p)]) + sys.b() * &us[0];
    for k in 1..=horizon {
        xs.push(prev.clone());
        prev = sys.a() * &prev + sys.b() * &us[k];
    }
    let split = |taps: &[Mat], rows: usize| -> Result<(FirOperator, FirOperator)> {
        let w: Vec<Mat> = taps.iter().map(|t| t.view((0, 0), (rows, n)).into_owned()).collect();
        let v: Vec<Mat> = taps.iter().map(|t| t.view((0, n), (rows, p)).into_owned()).collect();
        Ok((FirOperator::new(w)?, FirOperator::new(v)?))
    };
    let (phi_xw, phi_xn) = split(&xs, n)?;
    let (phi_uw, phi_un) = split(&us, m)?;
    Ok(SlsResponses {
        phi_xw,
        phi_xn,
        phi_uw,
        phi_un,
    })
}

#[cfg(test)]
mod tests {
    use super::super::augment::build_tracking_augmentation;
    use super::*;

    fn one() -> Mat {
        Mat::identity(1, 1)
    }

    /// Weighted L1 cost of the static law `u = k y` on a scalar plant, from
    /// long simulated impulse responses.
    fn static_gain_cost(a: f64, k: f64, sigma_w: f64, eps: f64) -> f64 {
        let steps = 4000;
        let (mut xw, mut xn) = (1.0_f64, 0.0_f64);
        let (mut row_x, mut row_u) = (0.0, 0.0);
        // n-impulse at time 0 enters u directly and x one step later.
        xn += k * eps;
        row_u += (k * eps).abs();
        for _ in 0..steps {
            row_x += sigma_w * xw.abs() + xn.abs();
            row_u += sigma_w * (k * xw).abs() + (k * xn).abs();
            xw *= a + k;
            xn *= a + k;
        }
        row_x.max(row_u)
    }

    #[test]
    fn scalar_objective_beats_every_static_gain() {
        let (a, eps) = (0.5, 0.1);
        let sys = LinearSystem::scalar(a, 1.0, 1.0).unwrap();
        let aug = build_tracking_augmentation(&sys, &one(), &one(), 1.0, 0.0, eps).unwrap().without_reference();
        let ctrl = sls_synthesize(&aug, &one(), &one(), 20, eps).unwrap();
        let best = (0..200)
            .map(|i| -1.5 + 2.0 * (i as f64 + 0.5) / 200.0)
            .map(|k| static_gain_cost(a, k, 1.0, eps))
            .fold(f64::INFINITY, f64::min);
        assert!(ctrl.objective <= best + 1e-3, "{} vs {best}", ctrl.objective);
        assert!(ctrl.residual <= RESIDUAL_TOL);
        assert!(ctrl.duality_gap <= GAP_TOL);
    }

    #[test]
    fn no_disturbance_costs_nothing() {
        let sys = LinearSystem::hovercraft();
        let q = sys.c().transpose() * sys.c();
        let r = Mat::identity(2, 2);
        let aug = build_tracking_augmentation(&sys, &q, &r, 0.0, 0.0, 0.0).unwrap();
        let ctrl = sls_synthesize(&aug, &q, &r, 10, 0.0).unwrap();
        assert_eq!(ctrl.objective, 0.0);
        assert_eq!(r_max_of_responses(&ctrl, 1.5, 0.0, 0.0).unwrap(), 1.5);
    }

    #[test]
    fn short_horizon_is_infeasible() {
        let sys = LinearSystem::hovercraft();
        let q = sys.c().transpose() * sys.c();
        let r = Mat::identity(2, 2);
        let aug = build_tracking_augmentation(&sys, &q, &r, 0.05, 0.1, 0.01).unwrap();
        assert!(matches!(sls_synthesize(&aug, &q, &r, 1, 0.01), Err(Error::Infeasible(_))));
    }

    fn integrator() -> (LinearSystem, AugmentedSystem) {
        let sys = LinearSystem::scalar(1.0, 1.0, 1.0).unwrap();
        let aug = build_tracking_augmentation(&sys, &one(), &one(), 0.1, 0.1, 0.2).unwrap();
        (sys, aug)
    }

    #[test]
    fn r_max_is_homogeneous_in_the_disturbance() {
        let (_, aug) = integrator();
        let ctrl = sls_synthesize(&aug, &one(), &one(), 10, 0.2).unwrap();
        let base = r_max_of_responses(&ctrl, 1.0, 0.1, 0.1).unwrap() - 1.0;
        let doubled = r_max_of_responses(&ctrl, 1.0, 0.2, 0.2).unwrap() - 1.0;
        assert!(base > 0.0);
        assert!((doubled - 2.0 * base).abs() < 1e-12);
    }

    #[test]
    fn inactive_escape_constraint_changes_nothing() {
        let (_, aug) = integrator();
        let plain = sls_synthesize(&aug, &one(), &one(), 10, 0.0).unwrap();
        let robust = robust_sls_synthesize(&aug, &one(), &one(), 10, 0.0, 1e6, 1.0).unwrap();
        assert!((plain.objective - robust.objective).abs() <= 1e-8);
    }

    #[test]
    fn robust_objective_is_monotone_and_feasible() {
        let (_, aug) = integrator();
        // A light state weight lets the input cost pull against the escape budget.
        let q = Mat::from_element(1, 1, 0.01);
        let (eps_h, r_ref) = (0.2, 1.0);
        let free = sls_synthesize(&aug, &q, &one(), 10, eps_h).unwrap();
        let loose = r_max_of_responses(&free, r_ref, aug.delta, aug.sigma_w).unwrap() + eps_h * free.output_noise_gain();
        let mut last = f64::NEG_INFINITY;
        let mut solved = 0;
        let mut binding = false;
        for i in 0..5 {
            // From the unconstrained level down toward the reference bound.
            let radius = r_ref + (loose - r_ref) * (1.0 - 0.15 * i as f64);
            match robust_sls_synthesize(&aug, &q, &one(), 10, eps_h, radius, r_ref) {
                Ok(c) => {
                    let used = c.output_disturbance_gain(&c.h_e).unwrap() + eps_h * c.output_noise_gain();
                    assert!(used <= radius - r_ref + 1e-7);
                    assert!(c.objective >= last - 1e-9);
                    binding |= c.objective > free.objective + 1e-6;
                    last = c.objective;
                    solved += 1;
                }
                Err(Error::Infeasible(msg)) => assert!(msg.contains("unsatisfiable")),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(binding);
        assert!(solved >= 2);
        // Larger perception error can only cost more.
        let a = robust_sls_synthesize(&aug, &q, &one(), 10, 0.1, loose, r_ref).unwrap();
        let b = robust_sls_synthesize(&aug, &q, &one(), 10, 0.2, loose, r_ref).unwrap();
        assert!(b.objective >= a.objective - 1e-9);
    }
}
