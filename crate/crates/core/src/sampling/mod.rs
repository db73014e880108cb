//! Dense sampling of the measurement subspace with resets.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{check_dim, Error, Result};
use crate::lin_sys::{FirOperator, LinearSystem, StaticOutputController};
use crate::linalg::{self, Mat, Vector};
use crate::perception::{uniform_box, Dataset, NoiseSpec, ObservationMap};

/// Default bound on `‖x‖_∞` before an episode is declared divergent.
pub const DEFAULT_GUARD: f64 = 1e6;

/// Parameters of the sampling scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    /// Sampling radius `r̄`.
    pub r_bar: f64,
    /// Number of episodes `T`.
    pub t: usize,
    /// Reset radius `σ_0`.
    pub sigma_0: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub guard: f64,
}

impl SamplingPlan {
    pub fn new(r_bar: f64, t: usize, sigma_0: f64, noise: NoiseSpec, seed: u64) -> Result<Self> {
        if !(r_bar > 0.0) {
            return Err(Error::InvalidInput("sampling radius must be positive".into()));
        }
        if t == 0 {
            return Err(Error::InvalidInput("dataset size must be at least one".into()));
        }
        if !(sigma_0 >= 0.0) {
            return Err(Error::InvalidInput("reset radius must be nonnegative".into()));
        }
        Ok(Self {
            r_bar,
            t,
            sigma_0,
            noise,
            seed,
            guard: DEFAULT_GUARD,
        })
    }

    /// Generator for episode `index`: a ChaCha stream keyed by the plan seed.
    pub fn episode_rng(&self, index: usize) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Minimum-norm inputs `u_0, …, u_{n−1}` with
/// `Σ_{k=1}^{n} CΦ_xu(k) u_{n−k} = y_ref`.
pub fn design_reference_inputs(
    sys: &LinearSystem,
    phi_xu: &FirOperator,
    y_ref: &Vector,
) -> Result<Vec<Vector>> {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    check_dim("reference", p, y_ref.len())?;
    check_dim("response columns", m, phi_xu.cols())?;
    if phi_xu.horizon() < n {
        return Err(Error::InvalidInput(format!(
            "input response has {} taps, need {n}",
            phi_xu.horizon()
        )));
    }
    // Block j multiplies u_j and holds CΦ_xu(n − j).
    let mut stacked = Mat::zeros(p, n * m);
    for j in 0..n {
        let blk = sys.c() * &phi_xu.taps()[n - j];
        stacked.view_mut((0, j * m), (p, m)).copy_from(&blk);
    }
    let rank = linalg::rank(&stacked);
    if rank < p {
        return Err(Error::Synthesis(format!(
            "stacked matrix [CΦ_xu(n) … CΦ_xu(1)] has rank {rank} < {p}"
        )));
    }
    let u = linalg::pinv(&stacked) * y_ref;
    Ok((0..n).map(|j| u.rows(j * m, m).into_owned()).collect())
}

/// Outcome of one episode: final observation, noisy label and (for testing)
/// the true state.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub z: Vector,
    pub y_train: Vector,
    pub x: Vector,
    pub y_ref: Vector,
}

/// Drives the observer loop for `u_ref.len()` steps from `x0` and returns the
/// final observation/label pair.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<R: rand::Rng + ?Sized>(
    sys: &LinearSystem,
    map: &dyn ObservationMap,
    ctrl: &mut StaticOutputController,
    u_ref: &[Vector],
    x0: &Vector,
    noise: &NoiseSpec,
    rng: &mut R,
    guard: f64,
) -> Result<(Vector, Vector, Vector)> {
    check_dim("initial state", sys.n(), x0.len())?;
    ctrl.reset();
    let mut x = x0.clone();
    let zero_w = Vector::zeros(sys.n());
    for (t, ur) in u_ref.iter().enumerate() {
        let y = sys.c() * &x + noise.sample(rng, sys.p());
        let u = ctrl.control(ur);
        ctrl.observe(sys, &u, &y);
        x = sys.simulate_step(&x, &u, &zero_w)?;
        let norm = linalg::vec_inf_norm(&x);
        if !(norm <= guard) {
            return Err(Error::Diverged { step: t + 1, norm });
        }
    }
    let cx = sys.c() * &x;
    let y_train = &cx + noise.sample(rng, sys.p());
    Ok((map.forward(&cx), y_train, x))
}

/// Episode `index` of the sampling scheme; depends only on the plan seed and
/// the index.
pub fn collect_episode(
    sys: &LinearSystem,
    map: &dyn ObservationMap,
    ctrl: &StaticOutputController,
    phi_xu: &FirOperator,
    plan: &SamplingPlan,
    index: usize,
) -> Result<Episode> {
    let mut rng = plan.episode_rng(index);
    let x0 = uniform_box(&mut rng, sys.n(), plan.sigma_0);
    let y_ref = uniform_box(&mut rng, sys.p(), plan.r_bar);
    let u_ref = design_reference_inputs(sys, phi_xu, &y_ref)?;
    let mut c = ctrl.clone();
    let (z, y_train, x) = run_episode(sys, map, &mut c, &u_ref, &x0, &plan.noise, &mut rng, plan.guard)?;
    Ok(Episode {
        z,
        y_train,
        x,
        y_ref,
    })
}

/// Assembles a dataset from episodes in index order.
pub fn assemble_dataset(sys: &LinearSystem, plan: &SamplingPlan, episodes: Vec<Episode>) -> Result<Dataset> {
    let mut zs = Vec::with_capacity(episodes.len());
    let mut ys = Vec::with_capacity(episodes.len());
    let mut truth = Vec::with_capacity(episodes.len());
    for e in episodes {
        truth.push(sys.c() * &e.x);
        zs.push(e.z);
        ys.push(e.y_train);
    }
    Dataset::new(zs, ys, plan.noise.certificate_level(), plan.sigma_0)?.with_truth(truth)
}

/// Runs all `T` episodes sequentially.
pub fn collect_dataset(
    sys: &LinearSystem,
    map: &dyn ObservationMap,
    ctrl: &StaticOutputController,
    phi_xu: &FirOperator,
    plan: &SamplingPlan,
) -> Result<Dataset> {
    let episodes = (0..plan.t)
        .map(|i| collect_episode(sys, map, ctrl, phi_xu, plan, i))
        .collect::<Result<Vec<_>>>()?;
    assemble_dataset(sys, plan, episodes)
}

/// Collects one sample per step along a single closed-loop trajectory that
/// tracks `reference(k)` with `u = K(x̂ − C†y_ref)`, starting at rest.
pub fn collect_trajectory_dataset<F>(
    sys: &LinearSystem,
    map: &dyn ObservationMap,
    ctrl: &StaticOutputController,
    reference: F,
    steps: usize,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Dataset>
where
    F: Fn(usize) -> Vector,
{
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let c_pinv = linalg::pinv(sys.c());
    let mut c = ctrl.clone();
    c.reset();
    let mut x = Vector::zeros(sys.n());
    let zero_w = Vector::zeros(sys.n());
    let (mut zs, mut ys, mut truth) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..=steps {
        let cx = sys.c() * &x;
        let y = &cx + noise.sample(&mut rng, sys.p());
        zs.push(map.forward(&cx));
        ys.push(y.clone());
        truth.push(cx);
        let u_ref = -(c.k() * (&c_pinv * reference(k)));
        let u = c.control(&u_ref);
        c.observe(sys, &u, &y);
        x = sys.simulate_step(&x, &u, &zero_w)?;
        let norm = linalg::vec_inf_norm(&x);
        if !(norm <= DEFAULT_GUARD) {
            return Err(Error::Diverged { step: k + 1, norm });
        }
    }
    Dataset::new(zs, ys, noise.certificate_level(), 0.0)?.with_truth(truth)
}
