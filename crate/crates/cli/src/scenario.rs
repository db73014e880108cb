//! Scenario files: JSON descriptions of one experiment.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use certeq_core::lin_sys::{LinearSystem, LqgWeights, StaticOutputController};
use certeq_core::linalg::{mat_from_rows, Mat};
use certeq_core::perception::{IdentityMap, Kernel, NoiseSpec, ObservationMap, RasterMap, SinusoidalLift};
use serde::{Deserialize, Serialize};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub seed: u64,
    pub system: SystemSpec,
    #[serde(default)]
    pub map: MapSpec,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub synthesis: SynthesisSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub predictor: PredictorSpec,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub pipeline: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Preset { preset: String },
    Matrices { a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    Sinusoidal { q: usize, radius: f64, seed: u64 },
    Raster { side: usize, radius: f64 },
    Identity { radius: f64 },
}

impl Default for MapSpec {
    fn default() -> Self {
        Self::Sinusoidal {
            q: 5,
            radius: 2.5,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub std: f64,
    pub clip: f64,
    #[serde(default)]
    pub sigma_0: f64,
}

/// LQG weights; `None` entries take the preset values `Q = CᵀC`, `R = I`,
/// `W = I`, `V = 0.1 I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    #[serde(default)]
    pub kind: ControllerKind,
    #[serde(default)]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub v: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    /// Static observer-based tracker, the same law used for collection.
    #[default]
    Observer,
    /// Synthesized L1 tracker.
    Synthesized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisSpec {
    pub horizon: usize,
    pub sigma_w: f64,
    pub delta: f64,
    pub eps: f64,
    pub r_max_ref: f64,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        Self {
            horizon: 40,
            sigma_w: 0.05,
            delta: 0.13,
            eps: 0.01,
            r_max_ref: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase", deny_unknown_fields)]
pub enum SamplingSpec {
    /// One trajectory tracing circles of growing radius.
    Circle { steps: usize },
    /// Uniform sampling with resets.
    Dense { r_bar: f64, t: usize },
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self::Circle { steps: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    #[default]
    Nw,
    Krr,
    True,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    #[default]
    Triangular,
    Epanechnikov,
    Box,
}

impl KernelName {
    pub fn kernel(self) -> Kernel {
        match self {
            Self::Triangular => Kernel::triangular(),
            Self::Epanechnikov => Kernel::epanechnikov(),
            Self::Box => Kernel::boxcar(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub gamma: f64,
    pub kernel: KernelName,
    pub alpha: f64,
    pub lambda: f64,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        Self {
            kind: PredictorKind::Nw,
            gamma: 0.1,
            kernel: KernelName::Triangular,
            alpha: 20.0,
            lambda: 1e-3,
        }
    }
}

/// `y_ref_k = [a sin(2πk/period), b cos(2πk/period)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSpec {
    pub a: f64,
    pub b: f64,
    pub period: f64,
    pub steps: usize,
    pub region: f64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            a: 1.9,
            b: 2.0,
            period: 100.0,
            steps: 400,
            region: 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ErrorNorm {
    #[default]
    Inf,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub side: usize,
    pub radius: f64,
    pub inner: [f64; 2],
    pub outer: [f64; 2],
    pub norm: ErrorNorm,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            side: 50,
            radius: 2.5,
            inner: [1.85, 2.1],
            outer: [1.25, 2.75],
            norm: ErrorNorm::Inf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Collect,
    Synthesize,
    Rollout,
    Grid,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma1,
    Lemma2,
    Thm3,
    Prop4,
    Rate,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Lemma1, Suite::Lemma2, Suite::Thm3, Suite::Prop4, Suite::Rate];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lemma1 => "lemma1",
            Self::Lemma2 => "lemma2",
            Self::Thm3 => "thm3",
            Self::Prop4 => "prop4",
            Self::Rate => "rate",
        }
    }
}

/// Parameters of the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub suites: Vec<Suite>,
    pub trials: usize,
    pub delta: f64,
    /// Dataset size for the pointwise, coverage and uniform suites.
    pub t: usize,
    /// Label noise for the pointwise and uniform suites.
    pub noise: NoiseConfig,
    /// Tightly clipped noise for the coverage suite, whose radius condition
    /// uses the almost-sure noise bound.
    pub coverage_noise: NoiseConfig,
    pub lemma1_gamma: f64,
    pub lemma1_min_coverage: f64,
    pub lemma1_query: [f64; 2],
    pub coverage_radius: f64,
    pub coverage_gamma: f64,
    pub coverage_grid: usize,
    pub uniform_radius: f64,
    pub uniform_gamma: f64,
    pub uniform_grid: usize,
    pub rate_t: Vec<usize>,
    pub rate_seeds: usize,
    pub rate_noise: NoiseConfig,
    pub rate_r_max: f64,
    pub prop4_steps: usize,
    pub prop4_gamma: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            trials: 200,
            delta: 0.1,
            t: 2000,
            noise: NoiseConfig {
                std: 0.05,
                clip: 10.0,
                sigma_0: 0.0,
            },
            coverage_noise: NoiseConfig {
                std: 0.005,
                clip: 0.01,
                sigma_0: 0.0,
            },
            lemma1_gamma: 0.15,
            lemma1_min_coverage: 25.0,
            lemma1_query: [0.3, -0.4],
            coverage_radius: 1.0,
            coverage_gamma: 0.3,
            coverage_grid: 15,
            uniform_radius: 1.0,
            uniform_gamma: 0.3,
            uniform_grid: 15,
            rate_t: vec![500, 1000, 2000, 4000, 8000],
            rate_seeds: 10,
            rate_noise: NoiseConfig {
                std: 0.5,
                clip: 10.0,
                sigma_0: 0.0,
            },
            rate_r_max: 1.25,
            prop4_steps: 400,
            prop4_gamma: 0.15,
        }
    }
}

impl Scenario {
    /// The hovercraft preset with every section at its default.
    pub fn hovercraft(seed: u64) -> Self {
        Self {
            version: SCENARIO_VERSION,
            name: Some("hovercraft".into()),
            seed,
            system: SystemSpec::Preset {
                preset: "hovercraft".into(),
            },
            map: MapSpec::default(),
            noise: None,
            controller: ControllerSpec::default(),
            synthesis: SynthesisSpec::default(),
            sampling: SamplingSpec::default(),
            predictor: PredictorSpec::default(),
            reference: ReferenceSpec::default(),
            grid: GridSpec::default(),
            verify: VerifySpec::default(),
            pipeline: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).context("scenario does not match the schema")?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_VERSION {
            bail!("field `version`: unsupported version {} (expected {SCENARIO_VERSION})", self.version);
        }
        self.system()?;
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                bail!("field `{name}` must be positive, found {v}")
            }
        };
        match self.map {
            MapSpec::Sinusoidal { radius, .. } | MapSpec::Raster { radius, .. } | MapSpec::Identity { radius } => {
                positive("map.radius", radius)?
            }
        }
        let noise = self.noise();
        if !(noise.std >= 0.0) || !(noise.clip >= 0.0) || !(noise.sigma_0 >= 0.0) {
            bail!("field `noise`: levels must be nonnegative");
        }
        if let SamplingSpec::Dense { r_bar, t } = self.sampling {
            positive("sampling.r_bar", r_bar)?;
            if t == 0 {
                bail!("field `sampling.t` must be at least one");
            }
        }
        if matches!(self.predictor.kind, PredictorKind::Nw) {
            positive("predictor.gamma", self.predictor.gamma)?;
        }
        positive("reference.region", self.reference.region)?;
        positive("reference.period", self.reference.period)?;
        positive("grid.radius", self.grid.radius)?;
        positive("verify.coverage_radius", self.verify.coverage_radius)?;
        positive("verify.uniform_radius", self.verify.uniform_radius)?;
        positive("verify.rate_r_max", self.verify.rate_r_max)?;
        if !(self.verify.delta > 0.0 && self.verify.delta < 1.0) {
            bail!("field `verify.delta` must lie in (0, 1)");
        }
        if self.synthesis.horizon == 0 {
            bail!("field `synthesis.horizon` must be at least one");
        }
        Ok(())
    }

    pub fn system(&self) -> Result<LinearSystem> {
        match &self.system {
            SystemSpec::Preset { preset } if preset == "hovercraft" => Ok(LinearSystem::hovercraft()),
            SystemSpec::Preset { preset } => bail!("field `system.preset`: unknown preset `{preset}`"),
            SystemSpec::Matrices { a, b, c } => {
                let m = |rows: &Vec<Vec<f64>>| {
                    let r: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
                    mat_from_rows(&r)
                };
                for (name, rows) in [("a", a), ("b", b), ("c", c)] {
                    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
                        bail!("field `system.{name}` must be a non-empty rectangular matrix");
                    }
                }
                LinearSystem::new(m(a), m(b), m(c)).context("field `system`")
            }
        }
    }

    /// Noise of the training labels: the preset `σ_η = 0.01` clipped at 1
    /// unless given.
    pub fn noise(&self) -> NoiseConfig {
        self.noise.unwrap_or(NoiseConfig {
            std: 0.01,
            clip: 1.0,
            sigma_0: 0.0,
        })
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        let n = self.noise();
        NoiseSpec::new(n.std, n.clip).context("field `noise`")
    }

    pub fn map(&self) -> Result<Arc<dyn ObservationMap>> {
        let p = self.system()?.p();
        Ok(match self.map {
            MapSpec::Sinusoidal { q, radius, seed } => {
                Arc::new(SinusoidalLift::new(p, q, radius, seed).context("field `map`")?)
            }
            MapSpec::Raster { side, radius } => Arc::new(RasterMap::new(p, side, radius).context("field `map`")?),
            MapSpec::Identity { radius } => Arc::new(IdentityMap::new(p, radius)),
        })
    }

    fn matrix_or(&self, given: &Option<Vec<Vec<f64>>>, name: &str, default: Mat) -> Result<Mat> {
        match given {
            None => Ok(default),
            Some(rows) => {
                if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
                    bail!("field `controller.{name}` must be a non-empty rectangular matrix");
                }
                let r: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
                let m = mat_from_rows(&r);
                if m.shape() != default.shape() {
                    bail!("field `controller.{name}` has shape {:?}, expected {:?}", m.shape(), default.shape());
                }
                Ok(m)
            }
        }
    }

    pub fn lqg_weights(&self) -> Result<LqgWeights> {
        let sys = self.system()?;
        let d = LqgWeights::standard(&sys);
        Ok(LqgWeights {
            q: self.matrix_or(&self.controller.q, "q", d.q.clone())?,
            r: self.matrix_or(&self.controller.r, "r", d.r.clone())?,
            w: self.matrix_or(&self.controller.w, "w", d.w.clone())?,
            v: self.matrix_or(&self.controller.v, "v", d.v.clone())?,
        })
    }

    pub fn observer(&self) -> Result<StaticOutputController> {
        let sys = self.system()?;
        StaticOutputController::lqg(&sys, &self.lqg_weights()?).context("controller design")
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("loading {}", path.display()))
}
