use alloc::vec::Vec;

use super::{ClosedLoopResponses, LinearSystem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;

/// Geometric envelope `M ρ^k` on response tap norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub m: f64,
    pub rho: f64,
}

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1.0 - 1e-6;
const DEFAULT_RHO: f64 = 0.5;
/// Taps below this fraction of the largest one are treated as numerical zeros
/// when forming ratios.
const RATIO_FLOOR: f64 = 1e-12;

impl DecayEnvelope {
    /// Fits the envelope to tap norms `norms[k]`.
    ///
    /// `ρ` is the largest ratio of successive norms from index `start` on,
    /// clamped into `[1e-6, 1 − 1e-6]`; `M` is then the smallest value at
    /// least one that covers every tap. If the ratios exceed one, only the
    /// second half of the taps is used for `ρ`.
    pub fn fit(norms: &[f64], start: usize) -> Result<Self> {
        let mut raw = max_ratio(norms, start).unwrap_or(DEFAULT_RHO);
        if raw >= 1.0 {
            // Transient growth between modes; the tail ratio still reflects
            // the slowest mode and `M` absorbs the bump.
            let tail = start.max(norms.len() / 2);
            raw = max_ratio(norms, tail).unwrap_or(raw);
        }
        if raw >= 1.0 {
            return Err(Error::NoDecay { ratio: raw });
        }
        let rho = raw.clamp(RHO_MIN, RHO_MAX);
        let mut m = 1.0_f64;
        for (k, v) in norms.iter().enumerate() {
            if *v > 0.0 {
                m = m.max(v / math::powi(rho, k as i32));
            }
        }
        if !m.is_finite() {
            return Err(Error::NoDecay { ratio: raw });
        }
        Ok(Self { m, rho })
    }

    pub fn bound(&self, k: usize) -> f64 {
        self.m * math::powi(self.rho, k as i32)
    }

    pub fn covers(&self, norms: &[f64]) -> bool {
        norms
            .iter()
            .enumerate()
            .all(|(k, v)| *v <= self.bound(k) * (1.0 + 1e-12))
    }

    /// `M σ / (1 − ρ)`: the bound on accumulated deviation under noise of size `σ`.
    pub fn deviation_bound(&self, sigma: f64) -> f64 {
        self.m * sigma / (1.0 - self.rho)
    }
}

fn max_ratio(norms: &[f64], start: usize) -> Option<f64> {
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    let floor = RATIO_FLOOR * peak;
    let mut ratio: Option<f64> = None;
    for k in start.max(1)..norms.len() {
        if norms[k - 1] > floor && norms[k] > floor {
            let r = norms[k] / norms[k - 1];
            ratio = Some(ratio.map_or(r, |q: f64| q.max(r)));
        }
    }
    ratio
}

/// Tap norms `max{‖CΦ_x(k)‖_∞, ‖CΦ_xn(k)‖_∞}`.
pub(crate) fn output_tap_norms(resp: &ClosedLoopResponses, sys: &LinearSystem) -> Vec<f64> {
    let cx = resp.phi_x.taps().iter().map(|t| linalg::inf_norm(&(sys.c() * t)));
    let cn = resp.phi_xn.taps().iter().map(|t| linalg::inf_norm(&(sys.c() * t)));
    cx.zip(cn).map(|(a, b)| a.max(b)).collect()
}

/// Envelope over the output-projected state and noise responses, with ratios
/// taken from index `n` on.
pub fn fit_decay_envelope(resp: &ClosedLoopResponses, sys: &LinearSystem) -> Result<DecayEnvelope> {
    DecayEnvelope::fit(&output_tap_norms(resp, sys), sys.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lin_sys::{closed_loop_responses, LqgWeights, StaticOutputController};

    #[test]
    fn impulse_only_gives_default_rate() {
        let e = DecayEnvelope::fit(&[1.0, 0.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(e, DecayEnvelope { m: 1.0, rho: 0.5 });
    }

    #[test]
    fn exact_geometric_sequence() {
        let norms: Vec<f64> = (0..50).map(|k| 0.9_f64.powi(k)).collect();
        let e = DecayEnvelope::fit(&norms, 2).unwrap();
        assert!((e.rho - 0.9).abs() < 1e-12);
        assert!((e.m - 1.0).abs() < 1e-9);
        assert!(e.covers(&norms));
    }

    #[test]
    fn growth_is_an_error() {
        let norms: Vec<f64> = (0..10).map(|k| 1.1_f64.powi(k)).collect();
        assert!(matches!(
            DecayEnvelope::fit(&norms, 1),
            Err(Error::NoDecay { .. })
        ));
    }

    #[test]
    fn hovercraft_envelope_covers_all_taps() {
        let sys = LinearSystem::hovercraft();
        let ctrl = StaticOutputController::lqg(&sys, &LqgWeights::standard(&sys)).unwrap();
        let resp = closed_loop_responses(&sys, &ctrl, 200).unwrap();
        let env = fit_decay_envelope(&resp, &sys).unwrap();
        assert!(env.rho < 1.0 && env.m >= 1.0);
        let norms = output_tap_norms(&resp, &sys);
        assert_eq!(norms.len(), 201);
        assert!(env.covers(&norms));
    }
}
