use certeq_core::linalg::{Mat, Vector};
use certeq_core::synthesis::{solve_lp, LpProblem, LpStatus};
use proptest::prelude::*;

/// Minimum of `c·x` over `{Gx ≤ h}` by enumerating every vertex.
fn vertex_min(c: &Vector, g: &Mat, h: &Vector) -> f64 {
    let d = c.len();
    let m = g.nrows();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let sub = Mat::from_fn(d, d, |i, j| g[(idx[i], j)]);
        let rhs = Vector::from_fn(d, |i, _| h[idx[i]]);
        if sub.determinant().abs() > 1e-9 {
            if let Some(x) = sub.lu().solve(&rhs) {
                let slack = h - g * &x;
                if slack.iter().all(|s| *s >= -1e-9) {
                    best = best.min(c.dot(&x));
                }
            }
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - d + i {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn lp_matches_vertex_enumeration(
        d in 1usize..=6,
        extra in 1usize..=5,
        seed in proptest::collection::vec(-1.0f64..1.0, 6 * 6 + 6 + 6 + 6),
    ) {
        // Box |x_i| ≤ 1 plus random half-spaces containing the origin.
        let c = Vector::from_fn(d, |i, _| seed[i]);
        let mut g = Mat::zeros(2 * d + extra, d);
        let mut h = Vector::zeros(2 * d + extra);
        for i in 0..d {
            g[(2 * i, i)] = 1.0;
            g[(2 * i + 1, i)] = -1.0;
            h[2 * i] = 1.0;
            h[2 * i + 1] = 1.0;
        }
        for k in 0..extra {
            for j in 0..d {
                g[(2 * d + k, j)] = seed[6 + 6 * k + j];
            }
            h[2 * d + k] = 0.2 + seed[42 + k].abs();
        }
        let mut p = LpProblem::new(c.clone());
        p.lower = Vector::from_element(d, f64::NEG_INFINITY);
        p.a_ub = g.clone();
        p.b_ub = h.clone();
        let sol = solve_lp(&p).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let oracle = vertex_min(&c, &g, &h);
        prop_assert!((sol.objective - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()),
            "lp {} vs vertices {}", sol.objective, oracle);
        prop_assert!(sol.duality_gap <= 1e-8);
        prop_assert!(sol.primal_violation <= 1e-9);
    }
}
