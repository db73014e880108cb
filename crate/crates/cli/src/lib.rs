//! Experiment driver: scenario files, training protocols, error grids,
//! verification suites and the artifact pipeline.

pub mod grid;
pub mod io;
pub mod pipeline;
pub mod protocol;
pub mod scenario;
pub mod verify;

pub use pipeline::{run_scenario, Overrides, RunReport};
pub use scenario::{load_scenario, Scenario, Stage, Suite};
