//! Analytic surrogate risk models evaluated frame by frame.

mod drf;
mod geometry;
mod pcad;

pub use drf::{drf_probability, drf_risk, DrfParams};
pub use geometry::{distance_to_unsafe_boundary, on_collision_course, Rect};
pub use pcad::{avoidance_difficulty, pcad_risk, pcad_weight, perceived_velocity, Avoidance, PcadParams};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::EventTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "PCAD")]
    Pcad,
    #[serde(rename = "DRF")]
    Drf,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Pcad => "PCAD",
            ModelKind::Drf => "DRF",
        }
    }
}

/// Raw per-frame outputs of both models for one trajectory.
pub fn raw_risk_series(traj: &EventTrajectory, pcad: &PcadParams, drf: &DrfParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p = Vec::with_capacity(traj.frames.len());
    let mut d = Vec::with_capacity(traj.frames.len());
    for f in &traj.frames {
        p.push(pcad_risk(f, pcad)?);
        d.push(drf_risk(f, drf));
    }
    Ok((p, d))
}
