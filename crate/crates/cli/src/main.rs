use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use certeq::pipeline::{run_scenario, stage_name, Overrides, REPORT_FILE};
use certeq::scenario::{load_scenario, PredictorKind, SamplingSpec, Scenario, Stage, Suite};
use clap::{Args, Parser, Subcommand, ValueEnum};

const DEFAULT_DENSE_T: usize = 2000;

#[derive(Parser)]
#[command(name = "certeq", version, about = "Perception-based control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON; the hovercraft preset when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Predictor {
    Nw,
    Krr,
    True,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Lemma1,
    Lemma2,
    Thm3,
    Prop4,
    Rate,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Collect training data with the scenario's sampling protocol.
    Collect {
        #[command(flatten)]
        common: Common,
        /// Number of samples; with --rbar this selects dense sampling.
        #[arg(long = "T")]
        t: Option<usize>,
        /// Sampling radius; switches to dense sampling with resets.
        #[arg(long)]
        rbar: Option<f64>,
        /// Dataset CSV path (default: <out-dir>/dataset.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize the tracking controller and export its responses.
    Synthesize(Common),
    /// Closed-loop rollout with a learned or exact predictor.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        predictor: Option<Predictor>,
        #[arg(long = "T-sim")]
        t_sim: Option<usize>,
        /// Horizontal semi-axis of the evaluation ellipse.
        #[arg(long)]
        reference_a: Option<f64>,
        /// Trajectory CSV path (default: <out-dir>/trajectory.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perception error over the evaluation grid.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        predictor: Option<Predictor>,
    },
    /// Monte Carlo verification of the error and suboptimality bounds.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run a list of stages (default: the scenario's pipeline, else all).
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<String>>,
    },
}

fn scenario(c: &Common) -> Result<Scenario> {
    let mut sc = match &c.scenario {
        Some(p) => load_scenario(p)?,
        None => Scenario::hovercraft(0),
    };
    if let Some(s) = c.seed {
        sc.seed = s;
    }
    Ok(sc)
}

fn predictor(p: Option<Predictor>) -> Option<PredictorKind> {
    p.map(|p| match p {
        Predictor::Nw => PredictorKind::Nw,
        Predictor::Krr => PredictorKind::Krr,
        Predictor::True => PredictorKind::True,
    })
}

fn parse_stage(s: &str) -> Result<Stage> {
    Ok(serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
        .map_err(|_| anyhow::anyhow!("unknown stage `{s}`"))?)
}

fn learned_prefix(sc: &Scenario, p: Option<PredictorKind>, stage: Stage) -> Vec<Stage> {
    if p.unwrap_or(sc.predictor.kind) == PredictorKind::True {
        vec![stage]
    } else {
        vec![Stage::Collect, stage]
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors exit 1; exit code 2 is reserved for failed verification.
            let _ = e.print();
            return Ok(if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS });
        }
    };
    let mut ov = Overrides::default();
    let (common, sc, stages) = match cli.command {
        Command::Collect { common, t, rbar, out } => {
            let mut sc = scenario(&common)?;
            sc.sampling = match (sc.sampling, rbar) {
                (SamplingSpec::Dense { r_bar, t: t0 }, r) => SamplingSpec::Dense {
                    r_bar: r.unwrap_or(r_bar),
                    t: t.unwrap_or(t0),
                },
                (SamplingSpec::Circle { .. }, Some(r_bar)) => SamplingSpec::Dense {
                    r_bar,
                    t: t.unwrap_or(DEFAULT_DENSE_T),
                },
                (SamplingSpec::Circle { steps }, None) => SamplingSpec::Circle { steps: t.unwrap_or(steps) },
            };
            sc.validate()?;
            ov.dataset_path = out;
            (common, sc, vec![Stage::Collect])
        }
        Command::Synthesize(c) => {
            let sc = scenario(&c)?;
            (c, sc, vec![Stage::Synthesize])
        }
        Command::Rollout { common, predictor: p, t_sim, reference_a, out } => {
            let sc = scenario(&common)?;
            ov.predictor = predictor(p);
            ov.steps = t_sim;
            ov.reference_a = reference_a;
            ov.trajectory_path = out;
            let stages = learned_prefix(&sc, ov.predictor, Stage::Rollout);
            (common, sc, stages)
        }
        Command::Grid { common, predictor: p } => {
            let sc = scenario(&common)?;
            ov.predictor = predictor(p);
            let stages = learned_prefix(&sc, ov.predictor, Stage::Grid);
            (common, sc, stages)
        }
        Command::Verify { common, suite, trials } => {
            let sc = scenario(&common)?;
            ov.suites = Some(match suite {
                SuiteArg::Lemma1 => vec![Suite::Lemma1],
                SuiteArg::Lemma2 => vec![Suite::Lemma2],
                SuiteArg::Thm3 => vec![Suite::Thm3],
                SuiteArg::Prop4 => vec![Suite::Prop4],
                SuiteArg::Rate => vec![Suite::Rate],
                SuiteArg::All => sc.verify.suites.clone(),
            });
            ov.trials = trials;
            (common, sc, vec![Stage::Verify])
        }
        Command::Run { common, stages } => {
            let sc = scenario(&common)?;
            let stages = match stages {
                Some(list) => list.iter().map(|s| parse_stage(s)).collect::<Result<_>>()?,
                None if !sc.pipeline.is_empty() => sc.pipeline.clone(),
                None => vec![Stage::Collect, Stage::Synthesize, Stage::Rollout, Stage::Grid, Stage::Verify],
            };
            (common, sc, stages)
        }
    };
    let report = run_scenario(&sc, &stages, &common.out_dir, &ov)?;
    for a in &report.manifest {
        println!("{:<10} {} ({} bytes)", stage_name(a.stage), a.path, a.bytes);
    }
    for v in &report.verification {
        if v.suite == Suite::Rate {
            let m = |k: &str| v.metrics.get(k).copied().unwrap_or(f64::NAN);
            println!(
                "verify {:<7} {} slope {:.3} (target {:.3} ± {})",
                v.suite.name(),
                if v.passed { "pass" } else { "FAIL" },
                m("slope"),
                m("target"),
                certeq::verify::SLOPE_TOLERANCE
            );
            continue;
        }
        println!(
            "verify {:<7} {} violations {}/{} (threshold {:.4})",
            v.suite.name(),
            if v.passed { "pass" } else { "FAIL" },
            v.violations,
            v.trials,
            v.threshold
        );
    }
    println!("report: {}", common.out_dir.join(REPORT_FILE).display());
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
        return Ok(ExitCode::from(1));
    }
    Ok(if report.verified() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
