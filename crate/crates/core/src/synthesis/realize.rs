//! Interconnection realization of `K = Φ_un − Φ_uw Φ_xw⁻¹ Φ_xn`.
//!
//! With `β = (zΦ_xw)⁻¹(zΦ_xn) y` the law becomes `u = Φ_un y − Φ_uw β`:
//!
//! ```text
//! β_k = Σ_{j≥0} Φ_xn(j+1) y_{k−j} − Σ_{j≥1} Φ_xw(j+1) β_{k−j}
//! u_k = Σ_{j≥0} Φ_un(j) y_{k−j}   − Σ_{j≥1} Φ_uw(j) β_{k−j}
//! ```
//!
//! which only needs `Φ_xw(1) = I`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::constraints::SlsResponses;
use crate::linalg::{Mat, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    xw: Vec<Mat>,
    xn: Vec<Mat>,
    uw: Vec<Mat>,
    un: Vec<Mat>,
    /// Most recent first.
    y_hist: VecDeque<Vector>,
    beta_hist: VecDeque<Vector>,
}

impl Realization {
    pub fn new(resp: &SlsResponses) -> Self {
        Self {
            xw: resp.phi_xw.taps().to_vec(),
            xn: resp.phi_xn.taps().to_vec(),
            uw: resp.phi_uw.taps().to_vec(),
            un: resp.phi_un.taps().to_vec(),
            y_hist: VecDeque::new(),
            beta_hist: VecDeque::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.xw.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.un[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.un[0].nrows()
    }

    pub fn reset(&mut self) {
        self.y_hist.clear();
        self.beta_hist.clear();
    }

    /// Consumes the current measurement and returns the current input.
    pub fn step(&mut self, y: &Vector) -> Vector {
        let h = self.horizon();
        let mut u = &self.un[0] * y;
        let mut beta = &self.xn[1.min(h)] * y;
        if h == 0 {
            beta.fill(0.0);
        }
        for (j, yj) in self.y_hist.iter().enumerate() {
            let lag = j + 1;
            if lag <= h {
                u += &self.un[lag] * yj;
            }
            if lag < h {
                beta += &self.xn[lag + 1] * yj;
            }
        }
        for (j, bj) in self.beta_hist.iter().enumerate() {
            let lag = j + 1;
            if lag <= h {
                u -= &self.uw[lag] * bj;
            }
            if lag < h {
                beta -= &self.xw[lag + 1] * bj;
            }
        }
        self.y_hist.push_front(y.clone());
        self.beta_hist.push_front(beta);
        self.y_hist.truncate(h);
        self.beta_hist.truncate(h);
        u
    }
}

#[cfg(test)]
mod tests {
    use super::super::augment::build_tracking_augmentation;
    use super::super::sls::sls_synthesize;
    use super::*;
    use crate::lin_sys::LinearSystem;

    fn nominal_impulse(sys: &LinearSystem, real: &mut Realization, w: Option<usize>, n: Option<usize>, steps: usize) -> (Vec<Vector>, Vec<Vector>) {
        real.reset();
        let mut x = Vector::zeros(sys.n());
        if let Some(i) = w {
            x[i] = 1.0;
        }
        let (mut xs, mut us) = (Vec::new(), Vec::new());
        for k in 0..steps {
            let mut y = sys.c() * &x;
            if let (Some(i), 0) = (n, k) {
                y[i] += 1.0;
            }
            let u = real.step(&y);
            xs.push(x.clone());
            us.push(u.clone());
            x = sys.a() * &x + sys.b() * &u;
        }
        (xs, us)
    }

    #[test]
    fn scalar_round_trip_reproduces_every_tap() {
        let sys = LinearSystem::scalar(1.3, 1.0, 1.0).unwrap();
        let one = Mat::identity(1, 1);
        let aug = build_tracking_augmentation(&sys, &one, &one, 1.0, 0.0, 0.2).unwrap().without_reference();
        let ctrl = sls_synthesize(&aug, &one, &one, 8, 0.2).unwrap();
        let mut real = ctrl.realize();
        let r = &ctrl.responses;
        let (xs, us) = nominal_impulse(&sys, &mut real, Some(0), None, 20);
        for k in 0..20 {
            let want_x = r.phi_xw.tap(k + 1).map_or(0.0, |t| t[(0, 0)]);
            let want_u = r.phi_uw.tap(k + 1).map_or(0.0, |t| t[(0, 0)]);
            assert!((xs[k][0] - want_x).abs() < 1e-9, "x at {k}");
            assert!((us[k][0] - want_u).abs() < 1e-9, "u at {k}");
        }
        let (xs, us) = nominal_impulse(&sys, &mut real, None, Some(0), 20);
        for k in 0..20 {
            let want_x = r.phi_xn.tap(k).map_or(0.0, |t| t[(0, 0)]);
            let want_u = r.phi_un.tap(k).map_or(0.0, |t| t[(0, 0)]);
            assert!((xs[k][0] - want_x).abs() < 1e-9, "x at {k}");
            assert!((us[k][0] - want_u).abs() < 1e-9, "u at {k}");
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let sys = LinearSystem::scalar(0.5, 1.0, 1.0).unwrap();
        let one = Mat::identity(1, 1);
        let aug = build_tracking_augmentation(&sys, &one, &one, 1.0, 0.0, 0.1).unwrap().without_reference();
        let mut real = sls_synthesize(&aug, &one, &one, 5, 0.1).unwrap().realize();
        for _ in 0..10 {
            assert_eq!(real.step(&Vector::zeros(1)), Vector::zeros(1));
        }
    }
}
