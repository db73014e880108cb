use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::noise::uniform_box;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::math;

/// Injective observation model `z = g(y)` with known inverse `h`, a metric on
/// observations and Lipschitz constants valid on the working box
/// `{‖y‖_∞ ≤ box_radius}`.
pub trait ObservationMap: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    /// Measurement dimension.
    fn p(&self) -> usize;
    /// Observation dimension.
    fn q(&self) -> usize;
    fn box_radius(&self) -> f64;
    fn forward(&self, y: &Vector) -> Vector;
    fn inverse(&self, z: &Vector) -> Vector;
    fn distance(&self, a: &Vector, b: &Vector) -> f64;
    /// `L_g` with `ρ(g(y), g(y')) ≤ L_g ‖y − y'‖_∞`.
    fn lipschitz_g(&self) -> f64;
    /// `L_h` with `‖h(z) − h(z')‖_∞ ≤ L_h ρ(z, z')`.
    fn lipschitz_h(&self) -> f64;
}

/// Inflation applied to sampled Lipschitz ratios.
pub const LIPSCHITZ_INFLATION: f64 = 1.2;
const LIPSCHITZ_PAIRS: usize = 20_000;

fn euclidean(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm()
}

/// Largest sampled ratios `ρ(g(y), g(y'))/‖y − y'‖_∞` and its reciprocal over
/// far and near pairs in the box, uninflated.
fn sampled_ratios<G, D>(p: usize, radius: f64, seed: u64, g: G, dist: D) -> (f64, f64)
where
    G: Fn(&Vector) -> Vector,
    D: Fn(&Vector, &Vector) -> f64,
{
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut lg, mut lh) = (0.0_f64, 0.0_f64);
    for i in 0..LIPSCHITZ_PAIRS {
        let y = uniform_box(&mut rng, p, radius);
        let y2 = if i % 2 == 0 {
            uniform_box(&mut rng, p, radius)
        } else {
            let scale = radius * math::powi(10.0, -(rng.random_range(1..5)));
            let dir = if i % 4 == 1 {
                Vector::from_fn(p, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            } else {
                uniform_box(&mut rng, p, 1.0)
            };
            (&y + dir * scale).map(|v| v.clamp(-radius, radius))
        };
        let dy = linalg::vec_inf_norm(&(&y - &y2));
        if dy < 1e-12 {
            continue;
        }
        let dz = dist(&g(&y), &g(&y2));
        lg = lg.max(dz / dy);
        if dz > 0.0 {
            lh = lh.max(dy / dz);
        }
    }
    (lg, lh)
}

/// `z_j = sin(⟨ω_j, y⟩ + φ_j)` with random frequencies kept small enough that
/// every argument stays in `(−π/2, π/2)` on the box, so `h` is an exact
/// arcsine followed by a least-squares solve.
#[derive(Debug, Clone)]
pub struct SinusoidalLift {
    freqs: Mat,
    freqs_pinv: Mat,
    phases: Vector,
    radius: f64,
    metric_scale: f64,
    lg: f64,
    lh: f64,
}

impl SinusoidalLift {
    pub fn new(p: usize, q: usize, radius: f64, seed: u64) -> Result<Self> {
        if p == 0 || q < 2 * p + 1 {
            return Err(Error::InvalidInput(alloc::format!(
                "sinusoidal lift needs q >= 2p + 1 (p={p}, q={q})"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("working box radius must be positive".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let limit = 0.45 * PI;
        for _ in 0..1000 {
            let phases = Vector::from_fn(q, |_, _| rng.random_range(-0.3..0.3));
            let mut freqs = Mat::from_fn(q, p, |_, _| rng.random_range(-1.0..1.0));
            for j in 0..q {
                let l1: f64 = freqs.row(j).iter().map(|v| v.abs()).sum();
                let room = (limit - phases[j].abs()) / (l1 * radius);
                let shrink = rng.random_range(0.6..1.0);
                freqs.row_mut(j).scale_mut(room * shrink);
            }
            let sv = freqs.clone().svd(false, false).singular_values;
            let (smin, smax) = (sv.min(), sv.max());
            if smin < 0.2 * smax {
                continue;
            }
            let freqs_pinv = linalg::pinv(&freqs);
            let mut map = Self {
                freqs,
                freqs_pinv,
                phases,
                radius,
                metric_scale: 1.0,
                lg: 1.0,
                lh: 1.0,
            };
            let (raw_g, _) = sampled_ratios(p, radius, seed ^ 0x5eed, |y| map.forward(y), euclidean);
            map.metric_scale = 1.0 / raw_g;
            let (lg, lh) =
                sampled_ratios(p, radius, seed ^ 0x5eed, |y| map.forward(y), |a, b| map.distance(a, b));
            map.lg = lg * LIPSCHITZ_INFLATION;
            map.lh = lh * LIPSCHITZ_INFLATION;
            return Ok(map);
        }
        Err(Error::InvalidInput(
            "could not draw well-conditioned frequencies".into(),
        ))
    }

    pub fn frequencies(&self) -> &Mat {
        &self.freqs
    }

    pub fn phases(&self) -> &Vector {
        &self.phases
    }
}

impl ObservationMap for SinusoidalLift {
    fn name(&self) -> &'static str {
        "sinusoidal"
    }

    fn p(&self) -> usize {
        self.freqs.ncols()
    }

    fn q(&self) -> usize {
        self.freqs.nrows()
    }

    fn box_radius(&self) -> f64 {
        self.radius
    }

    fn forward(&self, y: &Vector) -> Vector {
        (&self.freqs * y + &self.phases).map(math::sin)
    }

    fn inverse(&self, z: &Vector) -> Vector {
        let args = z.map(|v| math::asin(v.clamp(-1.0, 1.0))) - &self.phases;
        &self.freqs_pinv * args
    }

    fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        self.metric_scale * euclidean(a, b)
    }

    fn lipschitz_g(&self) -> f64 {
        self.lg
    }

    fn lipschitz_h(&self) -> f64 {
        self.lh
    }
}

/// `g = h = id` on `R^p`, for scalar and textbook scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityMap {
    p: usize,
    radius: f64,
}

impl IdentityMap {
    pub fn new(p: usize, radius: f64) -> Self {
        Self { p, radius }
    }
}

impl ObservationMap for IdentityMap {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn p(&self) -> usize {
        self.p
    }

    fn q(&self) -> usize {
        self.p
    }

    fn box_radius(&self) -> f64 {
        self.radius
    }

    fn forward(&self, y: &Vector) -> Vector {
        y.clone()
    }

    fn inverse(&self, z: &Vector) -> Vector {
        z.clone()
    }

    fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        (a - b).amax()
    }

    fn lipschitz_g(&self) -> f64 {
        1.0
    }

    fn lipschitz_h(&self) -> f64 {
        1.0
    }
}

/// Coarse synthetic image: a Gaussian bump centred at `y`, rendered on a
/// `side^p` pixel grid spanning slightly more than the working box.
#[derive(Debug, Clone)]
pub struct RasterMap {
    p: usize,
    centers: Vec<Vector>,
    width: f64,
    radius: f64,
    lg: f64,
    lh: f64,
}

/// Pixels dimmer than this fraction of the brightest are ignored by `h`.
const RASTER_BRIGHT: f64 = 0.02;

impl RasterMap {
    pub fn new(p: usize, side: usize, radius: f64) -> Result<Self> {
        if p == 0 || side < 2 {
            return Err(Error::InvalidInput("raster needs p >= 1 and side >= 2".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("working box radius must be positive".into()));
        }
        let q = side.checked_pow(p as u32).filter(|q| *q <= 1 << 16).ok_or_else(|| {
            Error::InvalidInput("raster has too many pixels".into())
        })?;
        let extent = 1.25 * radius;
        let spacing = 2.0 * extent / (side - 1) as f64;
        let mut centers = Vec::with_capacity(q);
        for idx in 0..q {
            let mut rem = idx;
            let c = Vector::from_fn(p, |_, _| {
                let k = rem % side;
                rem /= side;
                -extent + spacing * k as f64
            });
            centers.push(c);
        }
        let mut map = Self {
            p,
            centers,
            width: 1.5 * spacing,
            radius,
            lg: 1.0,
            lh: 1.0,
        };
        let (lg, lh) = sampled_ratios(p, radius, 0x7a57e5, |y| map.forward(y), euclidean);
        map.lg = lg * LIPSCHITZ_INFLATION;
        map.lh = lh * LIPSCHITZ_INFLATION;
        Ok(map)
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

impl ObservationMap for RasterMap {
    fn name(&self) -> &'static str {
        "raster"
    }

    fn p(&self) -> usize {
        self.p
    }

    fn q(&self) -> usize {
        self.centers.len()
    }

    fn box_radius(&self) -> f64 {
        self.radius
    }

    fn forward(&self, y: &Vector) -> Vector {
        let s2 = 2.0 * self.width * self.width;
        Vector::from_fn(self.centers.len(), |i, _| {
            math::exp(-(&self.centers[i] - y).norm_squared() / s2)
        })
    }

    /// Solves `log z_i + ‖c_i‖²/2s² = ⟨c_i, y⟩/s² + b` on bright pixels.
    fn inverse(&self, z: &Vector) -> Vector {
        let peak = z.max();
        let s2 = self.width * self.width;
        let bright: Vec<usize> = (0..z.len())
            .filter(|&i| peak > 0.0 && z[i] >= RASTER_BRIGHT * peak)
            .collect();
        if bright.len() <= self.p {
            return Vector::zeros(self.p);
        }
        let mut design = Mat::zeros(bright.len(), self.p + 1);
        let mut rhs = Vector::zeros(bright.len());
        for (r, &i) in bright.iter().enumerate() {
            let c = &self.centers[i];
            for j in 0..self.p {
                design[(r, j)] = c[j] / s2;
            }
            design[(r, self.p)] = 1.0;
            rhs[r] = math::ln(z[i]) + c.norm_squared() / (2.0 * s2);
        }
        let sol = linalg::pinv(&design) * rhs;
        sol.rows(0, self.p).into_owned()
    }

    fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        euclidean(a, b)
    }

    fn lipschitz_g(&self) -> f64 {
        self.lg
    }

    fn lipschitz_h(&self) -> f64 {
        self.lh
    }
}

/// Sampled check of `h(g(y)) = y` and both Lipschitz bounds; returns the
/// worst inversion error and the worst ratios relative to the stated constants.
pub fn check_map(map: &dyn ObservationMap, pairs: usize, seed: u64) -> MapCheck {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (p, r) = (map.p(), map.box_radius());
    let mut out = MapCheck::default();
    for _ in 0..pairs {
        let y = uniform_box(&mut rng, p, r);
        let y2 = if rng.random_bool(0.5) {
            uniform_box(&mut rng, p, r)
        } else {
            (&y + uniform_box(&mut rng, p, 0.01 * r)).map(|v| v.clamp(-r, r))
        };
        let (z, z2) = (map.forward(&y), map.forward(&y2));
        out.inversion_error = out
            .inversion_error
            .max(linalg::vec_inf_norm(&(map.inverse(&z) - &y)));
        let dy = linalg::vec_inf_norm(&(&y - &y2));
        let dz = map.distance(&z, &z2);
        if dy > 0.0 {
            out.g_ratio = out.g_ratio.max(dz / (map.lipschitz_g() * dy));
        }
        if dz > 0.0 {
            let dh = linalg::vec_inf_norm(&(map.inverse(&z) - map.inverse(&z2)));
            out.h_ratio = out.h_ratio.max(dh / (map.lipschitz_h() * dz));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MapCheck {
    pub inversion_error: f64,
    /// Largest observed `ρ(g(y), g(y'))/(L_g ‖y − y'‖_∞)`; at most one when valid.
    pub g_ratio: f64,
    /// Largest observed `‖h(z) − h(z')‖_∞/(L_h ρ(z, z'))`.
    pub h_ratio: f64,
}

impl MapCheck {
    pub fn passes(&self, inversion_tol: f64) -> bool {
        self.inversion_error <= inversion_tol && self.g_ratio <= 1.0 && self.h_ratio <= 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoidal_lift_passes_checks() {
        for p in 1..=3 {
            let map = SinusoidalLift::new(p, 2 * p + 3, 3.0, 11 + p as u64).unwrap();
            let c = check_map(&map, 10_000, 99);
            assert!(c.passes(1e-9), "p={p} {c:?}");
        }
    }

    #[test]
    fn raster_passes_checks() {
        let map = RasterMap::new(2, 12, 3.0).unwrap();
        let c = check_map(&map, 10_000, 5);
        assert!(c.passes(1e-9), "{c:?}");
    }

    #[test]
    fn sinusoidal_rejects_small_q() {
        assert!(SinusoidalLift::new(2, 4, 1.0, 0).is_err());
    }

    #[test]
    fn sinusoidal_arguments_stay_in_monotone_range() {
        let map = SinusoidalLift::new(2, 5, 2.5, 4).unwrap();
        for j in 0..5 {
            let l1: f64 = map.frequencies().row(j).iter().map(|v| v.abs()).sum();
            assert!(l1 * 2.5 + map.phases()[j].abs() <= 0.45 * PI + 1e-12);
        }
    }

    #[test]
    fn same_seed_same_map() {
        let a = SinusoidalLift::new(2, 5, 2.5, 4).unwrap();
        let b = SinusoidalLift::new(2, 5, 2.5, 4).unwrap();
        assert_eq!(a.frequencies(), b.frequencies());
        assert_eq!(a.lipschitz_h(), b.lipschitz_h());
    }
}
