//! Monte Carlo checks of the perception and closed-loop certificates.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{ensure, Result};
use certeq_core::closed_loop::{
    grid_points, log_log_slope, max_grid_error, paired_rollout, random_admissible_reference, rate_row,
    tracking_cost, RateStudy, RolloutSpec, SlsTracker,
};
use certeq_core::lin_sys::{closed_loop_responses, fit_decay_envelope, LinearSystem, StaticOutputController, FirOperator};
use certeq_core::linalg::{self, Vector};
use certeq_core::perception::{
    coverage_lower_bound, pointwise_error_bound, uniform_error_bound, Dataset, NoiseSpec, NwRegressor,
    ObservationMap, SideConditions, UniformBoundInputs,
};
use certeq_core::sampling::{collect_dataset, SamplingPlan};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::protocol;
use crate::scenario::{MapSpec, NoiseConfig, Scenario, Suite};

pub const REPORT_VERSION: u32 = 1;
/// Smallest number of trials accepted by the Monte Carlo suites.
pub const MIN_TRIALS: usize = 100;
/// Half-width of the accepted window around the theoretical rate exponent.
pub const SLOPE_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: u32,
    pub suite: Suite,
    pub trials: usize,
    pub violations: usize,
    pub frequency: f64,
    pub delta: f64,
    /// 95% Wilson interval for the violation probability.
    pub ci: [f64; 2],
    /// `δ + 3√(δ(1 − δ)/N)`.
    pub threshold: f64,
    pub passed: bool,
    pub warnings: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

/// 95% Wilson score interval.
pub fn wilson_interval(successes: usize, n: usize) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let ph = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (ph + z * z / (2.0 * nf)) / denom;
    let half = z * (ph * (1.0 - ph) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (centre + half).min(1.0) };
    [lo, hi]
}

pub fn binomial_threshold(delta: f64, n: usize) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / n as f64).sqrt()
}

fn report(suite: Suite, trials: usize, violations: usize, delta: f64) -> VerificationReport {
    let frequency = violations as f64 / trials.max(1) as f64;
    let threshold = binomial_threshold(delta, trials.max(1));
    VerificationReport {
        version: REPORT_VERSION,
        suite,
        trials,
        violations,
        frequency,
        delta,
        ci: wilson_interval(violations, trials),
        threshold,
        passed: frequency <= threshold,
        warnings: Vec::new(),
        metrics: BTreeMap::new(),
    }
}

/// SplitMix64 step; spreads (base, tag, index) over independent seeds.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn noise_spec(n: &NoiseConfig) -> Result<NoiseSpec> {
    Ok(NoiseSpec::new(n.std, n.clip)?)
}

/// The scenario's map with its working box grown to at least `radius`.
fn map_covering(sc: &Scenario, radius: f64) -> Result<Arc<dyn ObservationMap>> {
    let mut sc = sc.clone();
    sc.map = match sc.map {
        MapSpec::Sinusoidal { q, radius: r, seed } => MapSpec::Sinusoidal { q, radius: r.max(radius), seed },
        MapSpec::Raster { side, radius: r } => MapSpec::Raster { side, radius: r.max(radius) },
        MapSpec::Identity { radius: r } => MapSpec::Identity { radius: r.max(radius) },
    };
    sc.map()
}

struct Collector {
    sys: LinearSystem,
    ctrl: StaticOutputController,
    phi_xu: FirOperator,
}

impl Collector {
    fn new(sc: &Scenario) -> Result<Self> {
        let sys = sc.system()?;
        let ctrl = sc.observer()?;
        let phi_xu = closed_loop_responses(&sys, &ctrl, sys.n().max(10))?.phi_xu;
        Ok(Self { sys, ctrl, phi_xu })
    }

    fn collect(&self, map: &dyn ObservationMap, plan: &SamplingPlan) -> Result<Dataset> {
        Ok(collect_dataset(&self.sys, map, &self.ctrl, &self.phi_xu, plan)?)
    }
}

fn redraw_labels(data: &Dataset, noise: &NoiseSpec, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let truth = data.truth().expect("simulated data carries ground truth");
    let labels = truth.iter().map(|y| y + noise.sample(&mut rng, y.len())).collect();
    Ok(data.relabel(labels)?)
}

/// Pointwise bound at one fixed observation, over redraws of the label
/// noise on a fixed design.
pub fn lemma1(sc: &Scenario, trials: usize) -> Result<VerificationReport> {
    let v = &sc.verify;
    let map = sc.map()?;
    let p = map.p();
    let noise = noise_spec(&v.noise)?;
    let col = Collector::new(sc)?;
    let plan = SamplingPlan::new(map.box_radius(), v.t, 0.0, noise, derive_seed(sc.seed, 1, 0))?;
    let design = Arc::new(col.collect(map.as_ref(), &plan)?);
    let y_star = Vector::from_row_slice(&v.lemma1_query[..p.min(2)]);
    ensure!(y_star.len() == p, "the pointwise suite needs p = 2");
    let z = map.forward(&y_star);

    let mut gamma = v.lemma1_gamma;
    let kernel = sc.predictor.kernel.kernel();
    let mut s = NwRegressor::new(design.clone(), map.clone(), kernel, gamma)?.coverage(&z);
    for _ in 0..60 {
        if s >= v.lemma1_min_coverage {
            break;
        }
        gamma *= 1.1;
        s = NwRegressor::new(design.clone(), map.clone(), kernel, gamma)?.coverage(&z);
    }
    ensure!(s >= v.lemma1_min_coverage, "could not reach coverage {} at the query", v.lemma1_min_coverage);
    let sigma = noise.certificate_level();
    let bound = pointwise_error_bound(s, gamma, map.lipschitz_h(), sigma, p, v.delta)?;

    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let data = redraw_labels(&design, &noise, derive_seed(sc.seed, 11, i as u64))?;
            let nw = NwRegressor::new(Arc::new(data), map.clone(), kernel, gamma)?;
            Ok(linalg::vec_inf_norm(&(nw.predict(&z).0 - &y_star)))
        })
        .collect::<Result<_>>()?;
    let violations = errors.iter().filter(|e| **e > bound).count();
    let mut r = report(Suite::Lemma1, trials, violations, v.delta);
    r.metrics.insert("coverage".into(), s);
    r.metrics.insert("gamma".into(), gamma);
    r.metrics.insert("bound".into(), bound);
    r.metrics.insert("sigma_eta".into(), sigma);
    r.metrics.insert("max_error".into(), errors.iter().copied().fold(0.0, f64::max));
    Ok(r)
}

/// Coverage lower bound on a grid inside radius `r`, over independent
/// collections with `r̄ = r + Mσ/(1 − ρ) + γ/L_g`.
pub fn lemma2(sc: &Scenario, trials: usize) -> Result<VerificationReport> {
    let v = &sc.verify;
    let col = Collector::new(sc)?;
    let noise = noise_spec(&v.coverage_noise)?;
    let env = fit_decay_envelope(&closed_loop_responses(&col.sys, &col.ctrl, 200)?, &col.sys)?;
    let sigma = v.coverage_noise.sigma_0.max(noise.bound());
    let base = sc.map()?;
    let r = v.coverage_radius;
    let r_bar = r + env.deviation_bound(sigma) + v.coverage_gamma / base.lipschitz_g();
    let map = map_covering(sc, r_bar)?;
    let p = map.p();
    let kernel = sc.predictor.kernel.kernel();
    let flagged = coverage_lower_bound(
        v.t,
        v.coverage_gamma,
        r_bar,
        map.lipschitz_g(),
        map.lipschitz_h(),
        p,
        kernel.v_ker(p),
        v.delta,
    );
    let zs: Vec<Vector> = grid_points(p, v.coverage_grid, r).iter().map(|y| map.forward(y)).collect();
    let minima: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let plan = SamplingPlan::new(r_bar, v.t, v.coverage_noise.sigma_0, noise, derive_seed(sc.seed, 2, i as u64))?;
            let data = col.collect(map.as_ref(), &plan)?;
            let nw = NwRegressor::new(Arc::new(data), map.clone(), kernel, v.coverage_gamma)?;
            Ok(zs.iter().map(|z| nw.coverage(z)).fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<_>>()?;
    let violations = minima.iter().filter(|s| **s < flagged.value).count();
    let mut rep = report(Suite::Lemma2, trials, violations, v.delta);
    rep.warnings = flagged.warnings.iter().map(|w| format!("{w:?}")).collect();
    rep.metrics.insert("bound".into(), flagged.value);
    rep.metrics.insert("r_bar".into(), r_bar);
    rep.metrics.insert("m".into(), env.m);
    rep.metrics.insert("rho".into(), env.rho);
    rep.metrics.insert("min_coverage".into(), minima.iter().copied().fold(f64::INFINITY, f64::min));
    rep.metrics.insert("success_fraction".into(), 1.0 - rep.frequency);
    Ok(rep)
}

/// Uniform bound over a grid inside radius `r` with `r̄ = √2 r`.
pub fn thm3(sc: &Scenario, trials: usize) -> Result<VerificationReport> {
    let v = &sc.verify;
    let col = Collector::new(sc)?;
    let noise = noise_spec(&v.noise)?;
    let r = v.uniform_radius;
    let r_bar = std::f64::consts::SQRT_2 * r;
    let map = map_covering(sc, r_bar)?;
    let p = map.p();
    let kernel = sc.predictor.kernel.kernel();
    let env = fit_decay_envelope(&closed_loop_responses(&col.sys, &col.ctrl, 200)?, &col.sys)?;
    let inputs = UniformBoundInputs {
        t: v.t,
        gamma: v.uniform_gamma,
        r,
        l_g: map.lipschitz_g(),
        l_h: map.lipschitz_h(),
        sigma_eta: noise.certificate_level(),
        p,
        delta: v.delta,
    };
    let side = SideConditions {
        envelope: env,
        sigma_0: v.noise.sigma_0,
        l_kappa: kernel.lipschitz(),
        v_kappa: kernel.v_ker(p),
    };
    let flagged = uniform_error_bound(&inputs, Some(&side));
    let grid = grid_points(p, v.uniform_grid, r);
    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let plan = SamplingPlan::new(r_bar, v.t, v.noise.sigma_0, noise, derive_seed(sc.seed, 3, i as u64))?;
            let data = col.collect(map.as_ref(), &plan)?;
            let nw = NwRegressor::new(Arc::new(data), map.clone(), kernel, v.uniform_gamma)?;
            Ok(max_grid_error(&nw, map.as_ref(), &grid))
        })
        .collect::<Result<_>>()?;
    let violations = errors.iter().filter(|e| **e > flagged.value).count();
    let mut rep = report(Suite::Thm3, trials, violations, v.delta);
    rep.warnings = flagged.warnings.iter().map(|w| format!("{w:?}")).collect();
    rep.metrics.insert("bound".into(), flagged.value);
    rep.metrics.insert("max_error".into(), errors.iter().copied().fold(0.0, f64::max));
    Ok(rep)
}

/// Paired certainty-equivalent and exact-perception rollouts of the
/// synthesized tracker. Each non-escaping run must satisfy
/// `c(π̂) − c(π*) ≤ ε_h ‖[Q^{1/2}Φ_xn; R^{1/2}Φ_un]‖` with `ε_h` the largest
/// perception error of that run; runs whose error stays below the margin
/// `(r − r_max)/‖CΦ_xn‖` must not escape.
pub fn prop4(sc: &Scenario, trials: usize) -> Result<VerificationReport> {
    let v = &sc.verify;
    let ctrl = protocol::synthesize(sc)?;
    let r_max = protocol::r_max(sc, &ctrl)?;
    let r_bar = 2.0 * r_max;
    let region = std::f64::consts::SQRT_2 * r_max;
    let map = map_covering(sc, r_bar)?;
    let col = Collector::new(sc)?;
    let plan = SamplingPlan::new(r_bar, v.t, sc.noise().sigma_0, sc.noise_spec()?, derive_seed(sc.seed, 4, 0))?;
    let data = Arc::new(col.collect(map.as_ref(), &plan)?);
    let nw = NwRegressor::new(data, map.clone(), sc.predictor.kernel.kernel(), v.prop4_gamma)?;
    let gain = ctrl.noise_cost_gain();
    let margin = (region - r_max) / ctrl.output_noise_gain();
    let s = sc.synthesis;
    let tracker = SlsTracker::new(&ctrl);

    struct Run {
        escaped: bool,
        gap: f64,
        eps: f64,
        contained: bool,
    }
    let runs: Vec<Run> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Run> {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(sc.seed, 5, i as u64));
            let reference = random_admissible_reference(&mut rng, &ctrl.embedding, v.prop4_steps, s.r_max_ref, s.delta)?;
            let spec = RolloutSpec::new(v.prop4_steps, region, derive_seed(sc.seed, 6, i as u64)).with_disturbance(s.sigma_w);
            let (ce, star) = paired_rollout(&col.sys, map.as_ref(), &nw, &tracker, &reference, &spec)?;
            let gap = tracking_cost(&ce, &ctrl.q_sqrt, &ctrl.r_sqrt) - tracking_cost(&star, &ctrl.q_sqrt, &ctrl.r_sqrt);
            let eps = ce.max_perception_error();
            let escaped = ce.escaped() || ce.aborted_at.is_some();
            Ok(Run {
                escaped,
                gap,
                eps,
                contained: eps > margin || !escaped,
            })
        })
        .collect::<Result<_>>()?;
    let violations = runs
        .iter()
        .filter(|r| !r.contained || (!r.escaped && r.gap > r.eps * gain + 1e-12))
        .count();
    let mut rep = report(Suite::Prop4, trials, violations, 0.0);
    rep.passed = violations == 0;
    rep.metrics.insert("r_max".into(), r_max);
    rep.metrics.insert("region".into(), region);
    rep.metrics.insert("noise_cost_gain".into(), gain);
    rep.metrics.insert("certified_margin".into(), margin);
    rep.metrics.insert("escaped_runs".into(), runs.iter().filter(|r| r.escaped).count() as f64);
    rep.metrics.insert("certified_runs".into(), runs.iter().filter(|r| r.eps <= margin).count() as f64);
    rep.metrics.insert("max_gap".into(), runs.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max));
    rep.metrics.insert("max_eps".into(), runs.iter().map(|r| r.eps).fold(0.0, f64::max));
    Ok(rep)
}

/// Seed-averaged maximum grid error against dataset size, with the
/// balancing bandwidth at each size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub t: Vec<usize>,
    pub gamma: Vec<f64>,
    pub eps_mean: Vec<f64>,
    pub eps_bound: Vec<f64>,
    /// `eps[seed][i]`.
    pub eps: Vec<Vec<f64>>,
    pub slope: f64,
    pub slope_ci: [f64; 2],
}

pub fn rate_table(sc: &Scenario) -> Result<RateTable> {
    let v = &sc.verify;
    ensure!(v.rate_t.len() >= 4, "the rate suite needs at least four dataset sizes");
    ensure!(v.rate_seeds >= 2, "the rate suite needs at least two seeds");
    let col = Collector::new(sc)?;
    let r_max = v.rate_r_max;
    let map = map_covering(sc, (2.0 * r_max).max(sc.grid.radius))?;
    let study = RateStudy {
        sys: col.sys,
        collector: col.ctrl,
        phi_xu: col.phi_xu,
        map,
        kernel: sc.predictor.kernel.kernel(),
        noise: noise_spec(&v.rate_noise)?,
        sigma_0: v.rate_noise.sigma_0,
        r_max,
        grid_side: sc.grid.side,
        grid_radius: sc.grid.radius,
        delta: v.delta,
        closed_loop: None,
    };
    let jobs: Vec<(usize, usize)> = (0..v.rate_seeds).flat_map(|s| (0..v.rate_t.len()).map(move |i| (s, i))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, i)| rate_row(&study, v.rate_t[i], derive_seed(sc.seed, 7, s as u64)))
        .collect::<certeq_core::Result<Vec<_>>>()?;
    let nt = v.rate_t.len();
    let eps: Vec<Vec<f64>> = (0..v.rate_seeds).map(|s| (0..nt).map(|i| rows[s * nt + i].eps_emp).collect()).collect();
    let eps_mean: Vec<f64> = (0..nt).map(|i| eps.iter().map(|e| e[i]).sum::<f64>() / v.rate_seeds as f64).collect();
    let tf: Vec<f64> = v.rate_t.iter().map(|t| *t as f64).collect();
    let slope = log_log_slope(&tf, &eps_mean);
    let per_seed: Vec<f64> = eps.iter().map(|e| log_log_slope(&tf, e)).collect();
    let n = per_seed.len() as f64;
    let mean = per_seed.iter().sum::<f64>() / n;
    let sd = (per_seed.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let half = 1.96 * sd / n.sqrt();
    Ok(RateTable {
        t: v.rate_t.clone(),
        gamma: rows[..nt].iter().map(|r| r.gamma).collect(),
        eps_mean,
        eps_bound: rows[..nt].iter().map(|r| r.eps_bound).collect(),
        eps,
        slope,
        slope_ci: [mean - half, mean + half],
    })
}

/// Slope of the seed-averaged grid error, accepted within
/// `−1/(p+4) ± 0.15`.
pub fn rate(sc: &Scenario) -> Result<(VerificationReport, RateTable)> {
    let table = rate_table(sc)?;
    let p = sc.system()?.p() as f64;
    let target = -1.0 / (p + 4.0);
    let inside = |s: f64| (s - target).abs() <= SLOPE_TOLERANCE;
    let tf: Vec<f64> = table.t.iter().map(|t| *t as f64).collect();
    let outside = table.eps.iter().filter(|e| !inside(log_log_slope(&tf, e))).count();
    let mut rep = report(Suite::Rate, table.eps.len(), outside, 0.0);
    rep.passed = inside(table.slope);
    rep.metrics.insert("slope".into(), table.slope);
    rep.metrics.insert("slope_ci_low".into(), table.slope_ci[0]);
    rep.metrics.insert("slope_ci_high".into(), table.slope_ci[1]);
    rep.metrics.insert("target".into(), target);
    Ok((rep, table))
}

pub fn verify_bounds(sc: &Scenario, suite: Suite, trials: usize) -> Result<VerificationReport> {
    ensure!(trials >= MIN_TRIALS, "at least {MIN_TRIALS} trials are required, got {trials}");
    match suite {
        Suite::Lemma1 => lemma1(sc, trials),
        Suite::Lemma2 => lemma2(sc, trials),
        Suite::Thm3 => thm3(sc, trials),
        Suite::Prop4 => prop4(sc, trials),
        Suite::Rate => Ok(rate(sc)?.0),
    }
}
