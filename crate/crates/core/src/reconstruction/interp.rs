//! Interpolants through rating anchors.

use serde::{Deserialize, Serialize};

use super::RiskCurve;
use crate::error::{Error, Result};
use crate::scenario::{sample_count, DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Linear,
    QuadraticMonotone,
    Pchip,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Linear, Method::QuadraticMonotone, Method::Pchip];

    pub fn name(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::QuadraticMonotone => "quadratic_monotone",
            Method::Pchip => "pchip",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown interpolation method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Linear,
    /// `v0 + d0 * s + c * s^2` with `s = t - t0`.
    Quadratic { d0: f64, c: f64 },
    Hermite { d0: f64, d1: f64 },
}

/// Piecewise interpolant over sorted, deduplicated knots.
#[derive(Debug, Clone)]
pub struct Interpolant {
    t: Vec<f64>,
    v: Vec<f64>,
    pieces: Vec<Piece>,
    clamp: Option<(f64, f64)>,
}

/// Sorts nothing: rejects decreasing times, drops repeated identical
/// `(t, v)` pairs and rejects conflicting values at one time.
fn clean(anchors: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut t: Vec<f64> = Vec::with_capacity(anchors.len());
    let mut v: Vec<f64> = Vec::with_capacity(anchors.len());
    for &(ti, vi) in anchors {
        if !ti.is_finite() || !vi.is_finite() {
            return Err(Error::BadAnchors("non-finite anchor".into()));
        }
        if let (Some(&tp), Some(&vp)) = (t.last(), v.last()) {
            if ti < tp {
                return Err(Error::BadAnchors(format!("time decreases at t = {ti}")));
            }
            if ti == tp {
                if vi == vp {
                    continue;
                }
                return Err(Error::BadAnchors(format!("two values at t = {ti}")));
            }
        }
        t.push(ti);
        v.push(vi);
    }
    if t.len() < 2 {
        return Err(Error::BadAnchors("need at least two distinct anchors".into()));
    }
    Ok((t, v))
}

/// Knots whose slope is forced to zero: both ends, strict local extrema and
/// both ends of every flat pair.
pub fn poles(v: &[f64]) -> Vec<bool> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return true;
            }
            let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
            (b > a && b > c) || (b < a && b < c) || b == a || b == c
        })
        .collect()
}

impl Interpolant {
    pub fn new(method: Method, anchors: &[(f64, f64)]) -> Result<Self> {
        let (t, v) = clean(anchors)?;
        let pieces = match method {
            Method::Linear => vec![Piece::Linear; t.len() - 1],
            Method::QuadraticMonotone => quadratic_pieces(&t, &v),
            Method::Pchip => pchip_pieces(&t, &v),
        };
        let clamp = (method == Method::QuadraticMonotone).then_some((0.0, 10.0));
        Ok(Self { t, v, pieces, clamp })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.t, &self.v)
    }

    /// Value at `x`; held constant outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.v[0];
        }
        if x >= self.t[n - 1] {
            return self.v[n - 1];
        }
        let i = self.t.partition_point(|&ti| ti <= x) - 1;
        let (t0, t1, v0, v1) = (self.t[i], self.t[i + 1], self.v[i], self.v[i + 1]);
        let h = t1 - t0;
        let s = x - t0;
        let y = match self.pieces[i] {
            Piece::Linear => v0 + (v1 - v0) * (s / h),
            Piece::Quadratic { d0, c } => v0 + d0 * s + c * s * s,
            Piece::Hermite { d0, d1 } => {
                let u = s / h;
                let u2 = u * u;
                let u3 = u2 * u;
                (2.0 * u3 - 3.0 * u2 + 1.0) * v0
                    + (u3 - 2.0 * u2 + u) * h * d0
                    + (-2.0 * u3 + 3.0 * u2) * v1
                    + (u3 - u2) * h * d1
            }
        };
        match self.clamp {
            Some((lo, hi)) => y.clamp(lo, hi),
            None => y,
        }
    }

    /// Samples on the 10 Hz grid over `[0, duration]`.
    pub fn sample(&self, duration: f64) -> RiskCurve {
        let n = sample_count(duration);
        RiskCurve {
            dt: DT,
            values: (0..n).map(|k| self.eval(k as f64 * DT)).collect(),
        }
    }
}

fn quadratic_pieces(t: &[f64], v: &[f64]) -> Vec<Piece> {
    let pole = poles(v);
    let n = t.len();
    let mut pieces = Vec::with_capacity(n - 1);
    let mut d = 0.0;
    for i in 0..n - 1 {
        let h = t[i + 1] - t[i];
        let delta = (v[i + 1] - v[i]) / h;
        let end = 2.0 * delta - d;
        if pole[i + 1] || end * delta < 0.0 || delta == 0.0 {
            // End slope clamped to zero: the piece is re-solved from both
            // values and the flat end, which fixes its start slope at 2 * delta.
            pieces.push(Piece::Quadratic {
                d0: 2.0 * delta,
                c: -delta / h,
            });
            d = 0.0;
        } else {
            pieces.push(Piece::Quadratic {
                d0: d,
                c: (delta - d) / h,
            });
            d = end;
        }
    }
    pieces
}

fn pchip_pieces(t: &[f64], v: &[f64]) -> Vec<Piece> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
    let pole = poles(v);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if pole[i] || delta[i - 1] * delta[i] <= 0.0 {
            continue;
        }
        let w1 = 2.0 * h[i] + h[i - 1];
        let w2 = h[i] + 2.0 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    (0..n - 1)
        .map(|i| Piece::Hermite {
            d0: d[i],
            d1: d[i + 1],
        })
        .collect()
}

pub fn interp_linear(anchors: &[(f64, f64)], duration: f64) -> Result<RiskCurve> {
    Ok(Interpolant::new(Method::Linear, anchors)?.sample(duration))
}

pub fn interp_quadratic_monotone(anchors: &[(f64, f64)], duration: f64) -> Result<RiskCurve> {
    Ok(Interpolant::new(Method::QuadraticMonotone, anchors)?.sample(duration))
}

pub fn interp_pchip(anchors: &[(f64, f64)], duration: f64) -> Result<RiskCurve> {
    Ok(Interpolant::new(Method::Pchip, anchors)?.sample(duration))
}
