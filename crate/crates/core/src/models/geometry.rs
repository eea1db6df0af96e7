//! Velocity-space collision cone of an axis-aligned obstacle.
//!
//! The obstacle `R` is expressed relative to the subject's centre. A relative
//! velocity `w` is unsafe when the ray `t * w`, `0 <= t <= horizon`, meets
//! `R`. The unsafe set is the union of `lambda * R` for `lambda >= 1 / horizon`:
//! a cone bounded by two tangent rays, truncated by the near side of
//! `R / horizon`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.cx).abs() <= self.hx && (y - self.cy).abs() <= self.hy
    }

    fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.cx - self.hx, self.cy - self.hy),
            (self.cx + self.hx, self.cy - self.hy),
            (self.cx + self.hx, self.cy + self.hy),
            (self.cx - self.hx, self.cy + self.hy),
        ]
    }
}

/// Slab test: does `t * w` enter `rect` for some `t` in `[0, horizon]`?
pub fn on_collision_course(rect: &Rect, w: (f64, f64), horizon: f64) -> bool {
    let mut lo = 0.0_f64;
    let mut hi = horizon;
    for (c, h, v) in [(rect.cx, rect.hx, w.0), (rect.cy, rect.hy, w.1)] {
        if v == 0.0 {
            if (c).abs() > h {
                return false;
            }
        } else {
            let (a, b) = ((c - h) / v, (c + h) / v);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    lo <= hi
}

fn dist_to_ray(p: (f64, f64), a: (f64, f64), d: (f64, f64)) -> f64 {
    let t = (((p.0 - a.0) * d.0 + (p.1 - a.1) * d.1) / (d.0 * d.0 + d.1 * d.1)).max(0.0);
    (p.0 - a.0 - t * d.0).hypot(p.1 - a.1 - t * d.1)
}

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let d = (b.0 - a.0, b.1 - a.1);
    let len2 = d.0 * d.0 + d.1 * d.1;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * d.0 + (p.1 - a.1) * d.1) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * d.0).hypot(p.1 - a.1 - t * d.1)
}

/// Distance from `w` to the boundary of the unsafe set. The origin must lie
/// outside `rect`.
pub fn distance_to_unsafe_boundary(rect: &Rect, w: (f64, f64), horizon: f64) -> f64 {
    let corners = rect.corners();
    let (cx, cy) = (rect.cx, rect.cy);
    // Angles relative to the direction of the obstacle centre lie in (-pi/2, pi/2).
    let angle = |q: &(f64, f64)| (cx * q.1 - cy * q.0).atan2(cx * q.0 + cy * q.1);
    let lo = corners.iter().min_by(|a, b| angle(a).total_cmp(&angle(b))).copied().unwrap();
    let hi = corners.iter().max_by(|a, b| angle(a).total_cmp(&angle(b))).copied().unwrap();
    let s = 1.0 / horizon;
    let mut best = dist_to_ray(w, (lo.0 * s, lo.1 * s), lo).min(dist_to_ray(w, (hi.0 * s, hi.1 * s), hi));
    // Edges whose outward side faces the origin.
    let edges = [
        (rect.cx - rect.hx >= 0.0, corners[0], corners[3]),
        (rect.cx + rect.hx <= 0.0, corners[1], corners[2]),
        (rect.cy - rect.hy >= 0.0, corners[0], corners[1]),
        (rect.cy + rect.hy <= 0.0, corners[3], corners[2]),
    ];
    for (visible, a, b) in edges {
        if visible {
            best = best.min(dist_to_segment(w, (a.0 * s, a.1 * s), (b.0 * s, b.1 * s)));
        }
    }
    best
}
