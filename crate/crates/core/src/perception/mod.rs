//! Observation maps, kernel regressors and perception-error certificates.

mod bounds;
mod dataset;
mod kernel;
mod krr;
mod maps;
mod noise;
mod nw;

pub use bounds::{
    coverage_lower_bound, optimal_bandwidth, pointwise_error_bound, suboptimality_rate_bound,
    uniform_error_bound, BoundWarning, DataDrivenCertificate, FlaggedBound, SideConditions,
    UniformBoundInputs,
};
pub use dataset::Dataset;
pub use kernel::{adaptive_simpson, Kernel, KernelKind};
pub use krr::KrrRegressor;
pub use maps::{check_map, IdentityMap, MapCheck, ObservationMap, RasterMap, SinusoidalLift, LIPSCHITZ_INFLATION};
pub use noise::{uniform_box, NoiseSpec};
pub use nw::NwRegressor;
