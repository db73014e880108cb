use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{NwRegressor, ObservationMap};
use crate::error::{Error, Result};
use crate::lin_sys::DecayEnvelope;
use crate::linalg::Vector;
use crate::math;

/// A bound value together with the side conditions it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedBound {
    pub value: f64,
    pub warnings: Vec<BoundWarning>,
}

impl FlaggedBound {
    pub fn is_guaranteed(&self) -> bool {
        self.warnings.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundWarning {
    /// Sample size below the stated requirement.
    SampleSize { required: f64, actual: f64 },
    /// Bandwidth above the largest value the side condition admits.
    Bandwidth { limit: f64, actual: f64 },
    /// Zero noise drives the balancing bandwidth to zero.
    DegenerateBandwidth,
}

/// Pointwise bound `γL_h + σ/√s · √log(p²√s/δ)` at a point of coverage `s ≥ 1`.
pub fn pointwise_error_bound(
    coverage: f64,
    gamma: f64,
    l_h: f64,
    sigma_eta: f64,
    p: usize,
    delta: f64,
) -> Result<f64> {
    if !(coverage >= 1.0) {
        return Err(Error::CertificateUnavailable(alloc::format!(
            "coverage {coverage} is below one"
        )));
    }
    check_delta(delta)?;
    let pf = p as f64;
    let log_arg = pf * pf * math::sqrt(coverage) / delta;
    Ok(gamma * l_h + sigma_eta / math::sqrt(coverage) * math::sqrt(math::ln(log_arg)))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput("δ must lie in (0, 1)".into()))
    }
}

/// Certificate valid for every observation simultaneously, built from the
/// coverage at a finite set of anchors.
#[derive(Debug, Clone)]
pub struct DataDrivenCertificate {
    map: Arc<dyn ObservationMap>,
    anchors: Vec<(Vector, f64)>,
    gamma: f64,
    l_h: f64,
    l_kappa: f64,
    sigma_eta: f64,
    t: f64,
    p: usize,
    delta: f64,
}

impl DataDrivenCertificate {
    pub fn new(reg: &NwRegressor, anchors: &[Vector], l_h: f64, delta: f64) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidInput("anchor set is empty".into()));
        }
        check_delta(delta)?;
        let mut out = Vec::with_capacity(anchors.len());
        for a in anchors {
            let s = reg.coverage(a);
            if s < 1.0 {
                return Err(Error::CertificateUnavailable(alloc::format!(
                    "anchor coverage {s} is below one"
                )));
            }
            out.push((a.clone(), s));
        }
        Ok(Self {
            map: reg.map().clone(),
            anchors: out,
            gamma: reg.gamma(),
            l_h,
            l_kappa: reg.kernel().lipschitz(),
            sigma_eta: reg.dataset().sigma_eta,
            t: reg.dataset().len() as f64,
            p: reg.map().p(),
            delta,
        })
    }

    pub fn anchors(&self) -> usize {
        self.anchors.len()
    }

    /// `γL_h + min_i [σ/√s_i · √log(p²H√s_i/δ) + 2σT/s_i · L_κ/γ · ρ(z, z_i)]`.
    pub fn bound(&self, z: &Vector) -> f64 {
        let pf = self.p as f64;
        let h = self.anchors.len() as f64;
        let mut best = f64::INFINITY;
        for (zi, s) in &self.anchors {
            let noise = self.sigma_eta / math::sqrt(*s)
                * math::sqrt(math::ln(pf * pf * h * math::sqrt(*s) / self.delta));
            let dist = self.map.distance(z, zi);
            let smooth = if self.sigma_eta == 0.0 || dist == 0.0 {
                0.0
            } else {
                2.0 * self.sigma_eta * self.t / s * self.l_kappa / self.gamma * dist
            };
            best = best.min(noise + smooth);
        }
        self.gamma * self.l_h + best
    }
}

/// Coverage lower bound `½√(TV_κ)(γ/(r̄L_g))^{p/2}`; flagged when
/// `T < 8V_κ⁻¹ log(1/δ)(r̄L_hL_g²)^p γ^{−p}`.
#[allow(clippy::too_many_arguments)]
pub fn coverage_lower_bound(
    t: usize,
    gamma: f64,
    r_bar: f64,
    l_g: f64,
    l_h: f64,
    p: usize,
    v_kappa: f64,
    delta: f64,
) -> FlaggedBound {
    let tf = t as f64;
    let pf = p as f64;
    let value = 0.5 * math::sqrt(tf * v_kappa) * math::powf(gamma / (r_bar * l_g), pf / 2.0);
    let required = 8.0 / v_kappa
        * math::ln(1.0 / delta)
        * math::powf(r_bar * l_h * l_g * l_g, pf)
        * math::powf(gamma, -pf);
    let mut warnings = Vec::new();
    if tf < required {
        warnings.push(BoundWarning::SampleSize {
            required,
            actual: tf,
        });
    }
    FlaggedBound { value, warnings }
}

/// Inputs of the uniform error bound over the sampled region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBoundInputs {
    pub t: usize,
    pub gamma: f64,
    pub r: f64,
    pub l_g: f64,
    pub l_h: f64,
    pub sigma_eta: f64,
    pub p: usize,
    pub delta: f64,
}

/// Constants entering only the side conditions of the uniform bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideConditions {
    pub envelope: DecayEnvelope,
    pub sigma_0: f64,
    pub l_kappa: f64,
    pub v_kappa: f64,
}

/// `γL_h + σ/T^{1/4} · (L_g√2 r/γ)^{p/4} · (√(p log(T²/δ)) + 1)`, with the
/// bandwidth and sample-size conditions evaluated when `side` is given.
pub fn uniform_error_bound(inp: &UniformBoundInputs, side: Option<&SideConditions>) -> FlaggedBound {
    let tf = inp.t as f64;
    let pf = inp.p as f64;
    let sqrt2 = core::f64::consts::SQRT_2;
    let log_t = math::ln(tf * tf / inp.delta);
    let value = inp.gamma * inp.l_h
        + inp.sigma_eta / math::powf(tf, 0.25)
            * math::powf(inp.l_g * sqrt2 * inp.r / inp.gamma, pf / 4.0)
            * (math::sqrt(pf * log_t) + 1.0);
    let mut warnings = Vec::new();
    if let Some(sc) = side {
        let sigma = sc.sigma_0.max(inp.sigma_eta);
        let limit = inp.l_g * ((sqrt2 - 1.0) * inp.r - sc.envelope.deviation_bound(sigma));
        if inp.gamma > limit {
            warnings.push(BoundWarning::Bandwidth {
                limit,
                actual: inp.gamma,
            });
        }
        let ratio = inp.r / inp.gamma;
        let first = 8.0 * pf / sc.v_kappa
            * math::powf(sqrt2 * inp.l_h * inp.l_g * inp.l_g, pf)
            * math::powf(ratio, pf)
            * log_t;
        let second = math::powf(sc.v_kappa, -1.0 / 3.0)
            * math::powf(24.0 * sc.l_kappa * inp.l_h, 4.0 / 3.0)
            * math::powf(inp.l_g, pf / 3.0)
            * math::powf(ratio, (pf + 4.0) / 3.0);
        let required = first.max(second);
        if tf < required {
            warnings.push(BoundWarning::SampleSize {
                required,
                actual: tf,
            });
        }
    }
    FlaggedBound { value, warnings }
}

/// Bandwidth balancing the two terms of the uniform bound:
/// `γ^{(p+4)/4} = √2 √p σ (2 r_max L_g)^{p/4} / (L_h (T V_κ)^{1/4})`.
pub fn optimal_bandwidth(
    t: usize,
    r_max: f64,
    l_g: f64,
    l_h: f64,
    sigma_eta: f64,
    p: usize,
    v_kappa: f64,
) -> FlaggedBound {
    let pf = p as f64;
    let rhs = core::f64::consts::SQRT_2 * math::sqrt(pf) * sigma_eta
        * math::powf(2.0 * r_max * l_g, pf / 4.0)
        / (l_h * math::powf(t as f64 * v_kappa, 0.25));
    let value = math::powf(rhs, 4.0 / (pf + 4.0));
    let mut warnings = Vec::new();
    if sigma_eta == 0.0 {
        warnings.push(BoundWarning::DegenerateBandwidth);
    }
    FlaggedBound { value, warnings }
}

/// End-to-end suboptimality rate
/// `4 L_g L_h r_max (4p²σ⁴/T)^{1/(p+4)} S √log(T²/δ)` where `S` is the
/// noise sensitivity of the closed loop.
#[allow(clippy::too_many_arguments)]
pub fn suboptimality_rate_bound(
    t: usize,
    r_max: f64,
    l_g: f64,
    l_h: f64,
    sigma_eta: f64,
    p: usize,
    sensitivity: f64,
    delta: f64,
) -> f64 {
    let pf = p as f64;
    let tf = t as f64;
    let s4 = math::powi(sigma_eta, 4);
    4.0 * l_g * l_h * r_max
        * math::powf(4.0 * pf * pf * s4 / tf, 1.0 / (pf + 4.0))
        * sensitivity
        * math::sqrt(math::ln(tf * tf / delta))
}
