use serde::{Deserialize, Serialize};

use super::geometry::{distance_to_unsafe_boundary, on_collision_course, Rect};
use crate::error::{Error, Result};
use crate::features::{uncertain_velocity, Role, UncertaintySigmas};
use crate::scenario::Frame;

/// Potential collision avoidance difficulty parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcadParams {
    pub sigma_n_x: f64,
    pub sigma_n_y: f64,
    pub sigma_s_x: f64,
    pub sigma_s_y: f64,
    pub t_s_a: f64,
    pub t_n_a: f64,
    pub alpha: f64,
    /// Reference speed of the severity weight, m/s.
    pub v_lim: f64,
    /// Collision look-ahead horizon, s.
    pub horizon: f64,
    /// Difficulty reported when the footprints already overlap, m/s.
    pub overlap_cap: f64,
}

impl Default for PcadParams {
    fn default() -> Self {
        Self {
            sigma_n_x: 0.5,
            sigma_n_y: 0.3,
            sigma_s_x: 0.3,
            sigma_s_y: 0.2,
            t_s_a: 0.5,
            t_n_a: 1.0,
            alpha: 1.5,
            v_lim: 120.0 / 3.6,
            horizon: 10.0,
            overlap_cap: 30.0,
        }
    }
}

impl PcadParams {
    pub fn sigmas(&self) -> UncertaintySigmas {
        UncertaintySigmas {
            subject_x: self.sigma_s_x,
            subject_y: self.sigma_s_y,
            neighbour_x: self.sigma_n_x,
            neighbour_y: self.sigma_n_y,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sig = [self.sigma_n_x, self.sigma_n_y, self.sigma_s_x, self.sigma_s_y];
        if sig.iter().any(|s| !(*s >= 0.0)) || !(self.t_s_a >= 0.0) || !(self.t_n_a >= 0.0) {
            return Err(Error::InvalidConfig("PCAD sigmas and accumulation times must be >= 0".into()));
        }
        if !(self.alpha > 0.0 && self.v_lim > 0.0 && self.horizon > 0.0) {
            return Err(Error::InvalidConfig("PCAD alpha, v_lim and horizon must be > 0".into()));
        }
        Ok(())
    }
}

pub fn perceived_velocity(v: (f64, f64), a: (f64, f64), t_a: f64, dv_u: (f64, f64)) -> (f64, f64) {
    (v.0 + a.0 * t_a + dv_u.0, v.1 + a.1 * t_a + dv_u.1)
}

pub fn pcad_weight(v_s: f64, params: &PcadParams) -> f64 {
    (v_s.max(0.0) / params.v_lim).powf(params.alpha).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Avoidance {
    pub value: f64,
    /// Footprints overlap; `value` is the configured cap.
    pub overlap: bool,
}

/// Minimal change of the subject's perceived velocity that takes the pair
/// `(subject, neighbours[index])` off a collision course.
pub fn avoidance_difficulty(frame: &Frame, index: usize, params: &PcadParams) -> Result<Avoidance> {
    let s = &frame.subject;
    let n = frame.neighbours.get(index).ok_or(Error::MissingNeighbour {
        index,
        available: frame.neighbours.len(),
    })?;
    let rect = Rect {
        cx: n.x - s.x,
        cy: n.y - s.y,
        hx: 0.5 * (n.length + s.length),
        hy: 0.5 * (n.width + s.width),
    };
    if rect.contains(0.0, 0.0) {
        return Ok(Avoidance {
            value: params.overlap_cap,
            overlap: true,
        });
    }
    let us = uncertain_velocity(Role::Subject, frame, index, params.sigma_s_x, params.sigma_s_y)?;
    let un = uncertain_velocity(Role::Neighbour, frame, index, params.sigma_n_x, params.sigma_n_y)?;
    let vs = perceived_velocity((s.vx, s.vy), (s.ax, s.ay), params.t_s_a, us);
    let vn = perceived_velocity((n.vx, n.vy), (n.ax, n.ay), params.t_n_a, un);
    let w = (vs.0 - vn.0, vs.1 - vn.1);
    let value = if on_collision_course(&rect, w, params.horizon) {
        distance_to_unsafe_boundary(&rect, w, params.horizon)
    } else {
        0.0
    };
    Ok(Avoidance { value, overlap: false })
}

/// Largest weighted avoidance difficulty over all neighbours.
pub fn pcad_risk(frame: &Frame, params: &PcadParams) -> Result<f64> {
    let w = pcad_weight(frame.subject.speed(), params);
    let mut risk = 0.0_f64;
    for i in 0..frame.neighbours.len() {
        risk = risk.max(avoidance_difficulty(frame, i, params)?.value * w);
    }
    Ok(risk)
}
