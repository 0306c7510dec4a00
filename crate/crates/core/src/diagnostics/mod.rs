//! Turning trajectories into propagation measurements.

pub mod asymptote;
pub mod fit;
pub mod level_set;
pub mod probes;
pub mod renorm;

pub use asymptote::{kernel_asymptote, validate_linearized_far_field, AsymptoteReport};
pub use fit::{fit_drift_exponent, ols, DriftFit, Line};
pub use level_set::{track_level_set, LevelSetTrace, Reading};
pub use probes::{
    communication_sweep, floor_sweep, probe_field_to_road, probe_floor, probe_road_to_field, Communication, FloorSetup, ProbeSweep,
};
pub use renorm::{late_window, renormalized_samples, scale_grid, RenormTable};
