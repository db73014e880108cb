//! L1-optimal reference tracking synthesis over finite impulse responses.

pub mod augment;
pub mod constraints;
pub mod lp;
pub mod realize;
pub mod sls;

pub use augment::{build_tracking_augmentation, AugmentedSystem};
pub use constraints::{assemble_sls_constraints, sls_residual_dense, ConstraintRow, SlsConstraints, SlsResponses, TapLayout};
pub use lp::{solve_lp, solve_lp_with, LpOptions, LpProblem, LpSolution, LpStatus};
pub use realize::Realization;
pub use sls::{r_max_of_responses, robust_sls_synthesize, sls_synthesize, SynthesizedController, GAP_TOL, RESIDUAL_TOL};
