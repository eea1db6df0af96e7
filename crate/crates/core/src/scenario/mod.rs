//! Event catalog and deterministic 10 Hz trajectory synthesis for the four
//! highway scenario families.
//!
//! Vehicles are point masses with piecewise-constant acceleration over each
//! 0.1 s step, integrated exactly. The world frame has `x` pointing forward
//! along the road and `y` pointing left; the subject's lane centre is `y = 0`.

mod catalog;
mod controller;
mod profiles;
mod simulate;

pub use catalog::{enumerate_events, AccCategory, Anchors, EventSpec, Family, ModelGroup, Scenario};
pub use controller::{ControllerParams, GapReference};
pub use profiles::{
    braking_duration, lateral_profile, longitudinal_profile, LateralCategory, LateralProfile,
    LongitudinalProfile, SpeedChange,
};
pub use simulate::{simulate_event, trajectory_csv, EventTrajectory, Frame, SimConfig, VehicleState};

/// Sampling interval of every trajectory and curve.
pub const DT: f64 = 0.1;

/// Number of samples on a 10 Hz grid covering `[0, duration]`.
pub fn sample_count(duration: f64) -> usize {
    (duration / DT).round() as usize + 1
}

pub fn kmh_to_ms(v: f64) -> f64 {
    v / 3.6
}
