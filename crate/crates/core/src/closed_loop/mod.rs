//! Certainty-equivalent operation: perception in the loop, rollouts, costs
//! and suboptimality accounting.

pub mod controller;
pub mod example;
pub mod rate;
pub mod reference;
pub mod rollout;

pub use controller::{ce_step, ObserverTracker, SlsTracker, StaticGainTracker, TrackingController};
pub use example::{growth_ratios, InstabilityExample, FlawedPerception};
pub use rate::{end_to_end_rate, grid_points, log_log_slope, max_grid_error, rate_row, suboptimality_bound, ClosedLoopCheck, RateRow, RateStudy};
pub use reference::{random_admissible_reference, ReferenceSignal};
pub use rollout::{paired_rollout, rollout, tracking_cost, ExactPerception, MapInverse, Perception, RolloutSpec, Trajectory};
