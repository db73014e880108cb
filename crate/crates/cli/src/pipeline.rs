//! Stage orchestration with a file manifest and one JSON report.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use certeq_core::closed_loop::{rollout, tracking_cost, ObserverTracker, RolloutSpec, SlsTracker, TrackingController};
use certeq_core::linalg::diag_sqrt;
use certeq_core::perception::{Dataset, NwRegressor};
use certeq_core::synthesis::SynthesizedController;
use serde::{Deserialize, Serialize};

use crate::grid::{evaluate_error_grid, summarize, GridSummary};
use crate::io;
use crate::protocol;
use crate::scenario::{ControllerKind, PredictorKind, SamplingSpec, Scenario, Stage, Suite};
use crate::verify::{self, VerificationReport};

pub const RUN_REPORT_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: Stage,
    pub path: String,
    pub bytes: u64,
}

/// Sidecar written next to the dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub sampling: SamplingSpec,
    pub seed: u64,
    pub rows: usize,
    pub p: usize,
    pub q: usize,
    pub sigma_eta: f64,
    pub sigma_0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub horizon: usize,
    pub objective: f64,
    pub residual: f64,
    pub duality_gap: f64,
    pub lp_iterations: usize,
    pub r_max: f64,
    pub noise_cost_gain: f64,
    pub output_noise_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub predictor: PredictorKind,
    pub controller: ControllerKind,
    pub steps: usize,
    pub region: f64,
    /// Largest per-step cost over the simulated window; a lower bound on the
    /// infinite-horizon cost.
    pub finite_horizon_cost: f64,
    pub escaped: bool,
    pub escape_time: Option<usize>,
    pub aborted_at: Option<usize>,
    pub max_perception_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub scenario: Option<String>,
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub manifest: Vec<Artifact>,
    pub synthesis: Option<SynthesisSummary>,
    pub rollout: Option<RolloutSummary>,
    pub grid: Option<GridSummary>,
    pub verification: Vec<VerificationReport>,
    pub error: Option<String>,
}

impl RunReport {
    /// All verification suites passed (vacuously true without any).
    pub fn verified(&self) -> bool {
        self.verification.iter().all(|r| r.passed)
    }
}

/// Options that override the scenario for a single invocation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub predictor: Option<PredictorKind>,
    pub steps: Option<usize>,
    pub reference_a: Option<f64>,
    pub trajectory_path: Option<PathBuf>,
    pub dataset_path: Option<PathBuf>,
    pub suites: Option<Vec<Suite>>,
    pub trials: Option<usize>,
}

/// Rejects stage lists that use learned perception before collecting.
pub fn check_order(stages: &[Stage], predictor: PredictorKind) -> Result<()> {
    let mut collected = false;
    for s in stages {
        match s {
            Stage::Collect => collected = true,
            Stage::Rollout | Stage::Grid if predictor != PredictorKind::True && !collected => {
                bail!("stage `{}` with a learned predictor must follow `collect`", stage_name(*s))
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::Collect => "collect",
        Stage::Synthesize => "synthesize",
        Stage::Rollout => "rollout",
        Stage::Grid => "grid",
        Stage::Verify => "verify",
    }
}

struct State<'a> {
    sc: &'a Scenario,
    out: &'a Path,
    ov: &'a Overrides,
    data: Option<Arc<Dataset>>,
    ctrl: Option<SynthesizedController>,
    report: RunReport,
}

impl State<'_> {
    fn record(&mut self, stage: Stage, path: &Path) -> Result<()> {
        let bytes = std::fs::metadata(path)?.len();
        let rel = path.strip_prefix(self.out).unwrap_or(path);
        self.report.manifest.push(Artifact {
            stage,
            path: rel.to_string_lossy().replace('\\', "/"),
            bytes,
        });
        Ok(())
    }

    fn predictor(&self) -> PredictorKind {
        self.ov.predictor.unwrap_or(self.sc.predictor.kind)
    }

    fn controller(&mut self) -> Result<&SynthesizedController> {
        if self.ctrl.is_none() {
            self.ctrl = Some(protocol::synthesize(self.sc)?);
        }
        Ok(self.ctrl.as_ref().expect("set above"))
    }

    fn run(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Collect => {
                let data = protocol::collect(self.sc, self.sc.seed)?;
                let path = match &self.ov.dataset_path {
                    Some(p) => p.clone(),
                    None => self.out.join("dataset.csv"),
                };
                io::write_dataset(&path, &data)?;
                self.record(stage, &path)?;
                let side = path.with_extension("json");
                io::write_json(
                    &side,
                    &DatasetSummary {
                        sampling: self.sc.sampling.clone(),
                        seed: self.sc.seed,
                        rows: data.len(),
                        p: data.p(),
                        q: data.q(),
                        sigma_eta: data.sigma_eta,
                        sigma_0: data.sigma_0,
                    },
                )?;
                self.record(stage, &side)?;
                self.data = Some(Arc::new(data));
            }
            Stage::Synthesize => {
                let ctrl = self.controller()?.clone();
                let path = self.out.join("responses.csv");
                io::write_responses(&path, &ctrl.responses)?;
                self.record(stage, &path)?;
                let summary = SynthesisSummary {
                    horizon: ctrl.horizon(),
                    objective: ctrl.objective,
                    residual: ctrl.residual,
                    duality_gap: ctrl.duality_gap,
                    lp_iterations: ctrl.lp_iterations,
                    r_max: protocol::r_max(self.sc, &ctrl)?,
                    noise_cost_gain: ctrl.noise_cost_gain(),
                    output_noise_gain: ctrl.output_noise_gain(),
                };
                let path = self.out.join("synthesis.json");
                io::write_json(&path, &summary)?;
                self.record(stage, &path)?;
                self.report.synthesis = Some(summary);
            }
            Stage::Rollout => {
                let mut sc = self.sc.clone();
                if let Some(a) = self.ov.reference_a {
                    sc.reference.a = a;
                }
                if let Some(t) = self.ov.steps {
                    sc.reference.steps = t;
                }
                let kind = self.predictor();
                let perception = protocol::build_perception(&sc, kind, self.data.clone())?;
                let sys = sc.system()?;
                let map = sc.map()?;
                let reference = protocol::evaluation_reference(&sc)?;
                let spec = RolloutSpec::new(sc.reference.steps, sc.reference.region, sc.seed);
                let weights = sc.lqg_weights()?;
                let (mut tracker, q_sqrt, r_sqrt): (Box<dyn TrackingController>, _, _) = match sc.controller.kind {
                    ControllerKind::Observer => (
                        Box::new(ObserverTracker::new(&sys, &sc.observer()?)),
                        diag_sqrt(&weights.q)?,
                        diag_sqrt(&weights.r)?,
                    ),
                    ControllerKind::Synthesized => {
                        let c = self.controller()?;
                        (Box::new(SlsTracker::new(c)), c.q_sqrt.clone(), c.r_sqrt.clone())
                    }
                };
                let tr = rollout(&sys, map.as_ref(), perception.as_ref(), tracker.as_mut(), &reference, &spec)?;
                let path = match &self.ov.trajectory_path {
                    Some(p) => p.clone(),
                    None => self.out.join("trajectory.csv"),
                };
                io::write_trajectory(&path, &tr)?;
                self.record(stage, &path)?;
                let summary = RolloutSummary {
                    predictor: kind,
                    controller: sc.controller.kind,
                    steps: sc.reference.steps,
                    region: sc.reference.region,
                    finite_horizon_cost: tracking_cost(&tr, &q_sqrt, &r_sqrt),
                    escaped: tr.escaped(),
                    escape_time: tr.escape_time,
                    aborted_at: tr.aborted_at,
                    max_perception_error: tr.max_perception_error(),
                };
                let path = self.out.join("rollout.json");
                io::write_json(&path, &summary)?;
                self.record(stage, &path)?;
                self.report.rollout = Some(summary);
            }
            Stage::Grid => {
                let kind = self.predictor();
                let map = self.sc.map()?;
                let perception = protocol::build_perception(self.sc, kind, self.data.clone())?;
                let nw = match (kind, &self.data) {
                    (PredictorKind::Nw, Some(d)) => Some(NwRegressor::new(
                        d.clone(),
                        map.clone(),
                        self.sc.predictor.kernel.kernel(),
                        self.sc.predictor.gamma,
                    )?),
                    _ => None,
                };
                let coverage = |z: &certeq_core::linalg::Vector| nw.as_ref().map_or(0.0, |r| r.coverage(z));
                let points = evaluate_error_grid(perception.as_ref(), &coverage, map.as_ref(), &self.sc.grid)?;
                let path = self.out.join("grid.csv");
                io::write_grid(&path, &points)?;
                self.record(stage, &path)?;
                let summary = summarize(&points, &self.sc.grid);
                let path = self.out.join("grid_summary.json");
                io::write_json(&path, &summary)?;
                self.record(stage, &path)?;
                self.report.grid = Some(summary);
            }
            Stage::Verify => {
                let suites = self.ov.suites.clone().unwrap_or_else(|| self.sc.verify.suites.clone());
                let trials = self.ov.trials.unwrap_or(self.sc.verify.trials);
                for suite in suites {
                    let rep = if suite == Suite::Rate {
                        let (rep, table) = verify::rate(self.sc)?;
                        let path = self.out.join("rate.csv");
                        io::write_rate(&path, &table)?;
                        self.record(stage, &path)?;
                        rep
                    } else {
                        verify::verify_bounds(self.sc, suite, trials)?
                    };
                    let path = self.out.join(format!("verify_{}.json", suite.name()));
                    io::write_json(&path, &rep)?;
                    self.record(stage, &path)?;
                    self.report.verification.push(rep);
                }
            }
        }
        Ok(())
    }
}

/// Executes `stages` in order, writing artifacts under `out_dir` and the
/// report to `out_dir/report.json`. A failing stage stops the run; the
/// report then carries the partial manifest and the error.
pub fn run_scenario(sc: &Scenario, stages: &[Stage], out_dir: &Path, ov: &Overrides) -> Result<RunReport> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut st = State {
        sc,
        out: out_dir,
        ov,
        data: None,
        ctrl: None,
        report: RunReport {
            version: RUN_REPORT_VERSION,
            scenario: sc.name.clone(),
            seed: sc.seed,
            stages: stages.to_vec(),
            manifest: Vec::new(),
            synthesis: None,
            rollout: None,
            grid: None,
            verification: Vec::new(),
            error: None,
        },
    };
    let outcome = check_order(stages, st.predictor()).and_then(|_| {
        for s in stages {
            st.run(*s).with_context(|| format!("stage `{}`", stage_name(*s)))?;
        }
        Ok(())
    });
    if let Err(e) = &outcome {
        st.report.error = Some(format!("{e:#}"));
    }
    io::write_json(&out_dir.join(REPORT_FILE), &st.report)?;
    Ok(st.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_pipeline_has_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_scenario(&Scenario::hovercraft(1), &[], dir.path(), &Overrides::default()).unwrap();
        assert!(rep.manifest.is_empty());
        assert!(rep.error.is_none());
        assert!(dir.path().join(REPORT_FILE).exists());
    }

    #[test]
    fn learned_rollout_before_collect_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_scenario(&Scenario::hovercraft(1), &[Stage::Rollout], dir.path(), &Overrides::default()).unwrap();
        assert!(rep.error.unwrap().contains("collect"));
        assert!(rep.manifest.is_empty());
    }

    #[test]
    fn report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let ov = Overrides {
            predictor: Some(PredictorKind::True),
            steps: Some(20),
            ..Overrides::default()
        };
        let rep = run_scenario(&Scenario::hovercraft(2), &[Stage::Rollout], dir.path(), &ov).unwrap();
        let text = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap() + "\n", text);
    }
}
