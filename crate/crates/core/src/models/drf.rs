use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Frame;

/// Driving risk field parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrfParams {
    pub s_steepness: f64,
    pub t_la: f64,
    pub m_widening: f64,
    pub c_width: f64,
    #[serde(rename = "C_sev")]
    pub c_sev: f64,
    pub grid_dx: f64,
    pub grid_dy: f64,
    /// Carried for completeness; no term of the field uses it.
    #[serde(rename = "D_descent")]
    pub d_descent: f64,
}

impl Default for DrfParams {
    fn default() -> Self {
        Self {
            s_steepness: 0.005,
            t_la: 3.0,
            m_widening: 0.05,
            c_width: 0.5,
            c_sev: 1.0,
            grid_dx: 0.5,
            grid_dy: 0.25,
            d_descent: 0.0,
        }
    }
}

impl DrfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_la > 0.0 && self.c_width > 0.0 && self.grid_dx > 0.0 && self.grid_dy > 0.0) {
            return Err(Error::InvalidConfig("DRF t_la, c_width and grid steps must be > 0".into()));
        }
        Ok(())
    }
}

/// Field value at `(x, y)` relative to the subject. Zero behind the subject
/// and at or beyond the preview point `v_sx * t_la`.
pub fn drf_probability(x: f64, y: f64, v_sx: f64, params: &DrfParams) -> f64 {
    let preview = v_sx * params.t_la;
    if x < 0.0 || x >= preview {
        return 0.0;
    }
    let h = params.s_steepness * (x - preview) * (x - preview);
    let sigma = params.m_widening * x + params.c_width;
    h * (-(y * y) / (2.0 * sigma * sigma)).exp()
}

/// Field summed over each neighbour's footprint with midpoint cells no larger
/// than the configured grid steps.
pub fn drf_risk(frame: &Frame, params: &DrfParams) -> f64 {
    let s = &frame.subject;
    let mut total = 0.0;
    for n in &frame.neighbours {
        let (x0, y0) = (n.x - s.x - 0.5 * n.length, n.y - s.y - 0.5 * n.width);
        let nx = (n.length / params.grid_dx).ceil().max(1.0) as usize;
        let ny = (n.width / params.grid_dy).ceil().max(1.0) as usize;
        let (dx, dy) = (n.length / nx as f64, n.width / ny as f64);
        let mut sum = 0.0;
        for i in 0..nx {
            let x = x0 + (i as f64 + 0.5) * dx;
            for j in 0..ny {
                let y = y0 + (j as f64 + 0.5) * dy;
                sum += drf_probability(x, y, s.vx, params);
            }
        }
        total += sum * params.c_sev * dx * dy;
    }
    total
}
