//! Scripted speed and lateral-position profiles.
//!
//! Every profile is a sequence of per-step constant accelerations, so the
//! sampled positions are the exact integral of the sampled velocities.

use serde::{Deserialize, Serialize};

use super::{kmh_to_ms, sample_count, Anchors, DT};
use crate::error::{Error, Result};

/// Speed the braking lead decelerates to, km/h.
pub const LOW_SPEED_KMH: f64 = 60.0;
/// Lateral speed of the slow lane-change variants, m/s.
pub const SLOW_LATERAL_SPEED: f64 = 1.0;
/// Lateral speed of the fast lane-change variants, m/s.
pub const FAST_LATERAL_SPEED: f64 = 3.0;
/// Midline pause of the fragmented and aborted lane changes, s.
pub const MIDLINE_HOLD: f64 = 6.0;
/// Duration of the lateral-velocity ramps at both ends of a move, s.
pub const DEFAULT_LATERAL_RAMP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralCategory {
    NormalSlow,
    NormalFast,
    Fragmented,
    Aborted,
}

impl LateralCategory {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal_slow" | "1m/s" => Ok(Self::NormalSlow),
            "normal_fast" | "3m/s" => Ok(Self::NormalFast),
            "fragmented" => Ok(Self::Fragmented),
            "aborted" | "abortion" => Ok(Self::Aborted),
            other => Err(Error::UnknownCategory(other.to_string())),
        }
    }

    pub fn from_scenario(s: super::Scenario) -> Option<Self> {
        use super::Scenario::*;
        match s {
            LcNormalSlow => Some(Self::NormalSlow),
            LcNormalFast => Some(Self::NormalFast),
            LcFragmented => Some(Self::Fragmented),
            LcAborted => Some(Self::Aborted),
            _ => None,
        }
    }

    pub fn lateral_speed(self) -> f64 {
        match self {
            Self::NormalSlow | Self::Aborted => SLOW_LATERAL_SPEED,
            Self::NormalFast | Self::Fragmented => FAST_LATERAL_SPEED,
        }
    }
}

/// Sampled lateral displacement from the starting position.
#[derive(Debug, Clone)]
pub struct LateralProfile {
    pub y: Vec<f64>,
    pub vy: Vec<f64>,
    pub ay: Vec<f64>,
    /// Time needed to cover the full lateral distance at the plateau speed,
    /// summed over all moves of one direction.
    pub crossing_time: f64,
    /// Plateau lateral speed actually used (grid-quantized).
    pub plateau_speed: f64,
    /// `(start, end)` of the midline pause, if any.
    pub hold: Option<(f64, f64)>,
}

struct LateralMove {
    onset_step: usize,
    displacement: f64,
    speed: f64,
}

impl LateralMove {
    /// Total steps and per-step accelerations of a trapezoidal move that
    /// covers `displacement` exactly on the 0.1 s grid.
    fn plan(&self, ramp: f64) -> (Vec<f64>, f64, f64) {
        let d = self.displacement.abs();
        let n = ((d / (self.speed * DT)).round() as usize).max(1);
        let plateau = d / (n as f64 * DT);
        let n_ramp = ((ramp / DT).round() as usize).clamp(1, n);
        let accel = plateau / (n_ramp as f64 * DT) * self.displacement.signum();
        let mut steps = vec![accel; n_ramp];
        steps.extend(std::iter::repeat_n(0.0, n - n_ramp));
        steps.extend(std::iter::repeat_n(-accel, n_ramp));
        (steps, plateau, n as f64 * DT)
    }
}

fn integrate_lateral(moves: &[LateralMove], n_samples: usize, ramp: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut ay = vec![0.0; n_samples];
    // (end step, exact target) at which the state is snapped
    let mut snaps = Vec::new();
    let mut target = 0.0;
    for mv in moves {
        let (steps, _, _) = mv.plan(ramp);
        for (i, a) in steps.iter().enumerate() {
            if let Some(slot) = ay.get_mut(mv.onset_step + i) {
                *slot = *a;
            }
        }
        target += mv.displacement;
        snaps.push((mv.onset_step + steps.len(), target));
    }
    let mut y = vec![0.0; n_samples];
    let mut vy = vec![0.0; n_samples];
    for k in 0..n_samples - 1 {
        y[k + 1] = y[k] + vy[k] * DT + 0.5 * ay[k] * DT * DT;
        vy[k + 1] = vy[k] + ay[k] * DT;
        if let Some(&(_, tgt)) = snaps.iter().find(|(s, _)| *s == k + 1) {
            y[k + 1] = tgt;
            vy[k + 1] = 0.0;
        }
    }
    (y, vy, ay)
}

/// Lateral displacement profile of a lane change toward the subject lane,
/// positive in the direction of travel across the lane.
///
/// Normal changes cross `lane_width` in one move. Fragmented changes stop at
/// the midline for [`MIDLINE_HOLD`] before completing; aborted changes stop at
/// the midline and then return to the starting position.
pub fn lateral_profile(
    category: LateralCategory,
    onset: f64,
    lane_width: f64,
    duration: f64,
) -> Result<LateralProfile> {
    lateral_profile_with_ramp(category, onset, lane_width, duration, DEFAULT_LATERAL_RAMP)
}

pub fn lateral_profile_with_ramp(
    category: LateralCategory,
    onset: f64,
    lane_width: f64,
    duration: f64,
    ramp: f64,
) -> Result<LateralProfile> {
    if !(0.0..=duration).contains(&onset) {
        return Err(Error::InvalidSpec(format!(
            "lateral onset {onset} s outside [0, {duration}]"
        )));
    }
    if !(lane_width > 0.0) || !(ramp > 0.0) {
        return Err(Error::InvalidSpec("lane width and ramp must be positive".into()));
    }
    let n_samples = sample_count(duration);
    let onset_step = (onset / DT).round() as usize;
    let speed = category.lateral_speed();
    let half = 0.5 * lane_width;
    let hold_steps = (MIDLINE_HOLD / DT).round() as usize;

    let mut moves = Vec::new();
    let mut hold = None;
    match category {
        LateralCategory::NormalSlow | LateralCategory::NormalFast => moves.push(LateralMove {
            onset_step,
            displacement: lane_width,
            speed,
        }),
        LateralCategory::Fragmented | LateralCategory::Aborted => {
            let first = LateralMove {
                onset_step,
                displacement: half,
                speed,
            };
            let first_len = first.plan(ramp).0.len();
            let second_onset = onset_step + first_len + hold_steps;
            hold = Some(((onset_step + first_len) as f64 * DT, second_onset as f64 * DT));
            moves.push(first);
            moves.push(LateralMove {
                onset_step: second_onset,
                displacement: if category == LateralCategory::Fragmented { half } else { -half },
                speed,
            });
        }
    }
    let (_, plateau, first_time) = moves[0].plan(ramp);
    let crossing_time = match category {
        LateralCategory::Fragmented => first_time + moves[1].plan(ramp).2,
        _ => first_time,
    };
    let (y, vy, ay) = integrate_lateral(&moves, n_samples, ramp);
    Ok(LateralProfile {
        y,
        vy,
        ay,
        crossing_time,
        plateau_speed: plateau,
        hold,
    })
}

/// Lateral move of fixed speed used for on-ramp merges (MB merging vehicle,
/// SVM subject).
pub fn merge_profile(onset: f64, lane_width: f64, speed: f64, duration: f64, ramp: f64) -> Result<LateralProfile> {
    if !(0.0..=duration).contains(&onset) {
        return Err(Error::InvalidSpec(format!("merge onset {onset} s outside [0, {duration}]")));
    }
    let mv = LateralMove {
        onset_step: (onset / DT).round() as usize,
        displacement: lane_width,
        speed,
    };
    let (_, plateau, time) = mv.plan(ramp);
    let (y, vy, ay) = integrate_lateral(&[mv], sample_count(duration), ramp);
    Ok(LateralProfile {
        y,
        vy,
        ay,
        crossing_time: time,
        plateau_speed: plateau,
        hold: None,
    })
}

/// A commanded speed change: from `onset` on, accelerate at `rate` (m/s²,
/// magnitude) toward `target` (m/s) and hold it once reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedChange {
    pub onset: f64,
    pub target: f64,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct LongitudinalProfile {
    pub x: Vec<f64>,
    pub vx: Vec<f64>,
    pub ax: Vec<f64>,
}

/// Integrates a piecewise speed schedule on the 10 Hz grid. The step in
/// which a target is reached uses the partial acceleration that lands on it
/// exactly.
pub fn speed_schedule(initial_speed: f64, changes: &[SpeedChange], duration: f64) -> LongitudinalProfile {
    let n = sample_count(duration);
    let mut x = vec![0.0; n];
    let mut vx = vec![initial_speed; n];
    let mut ax = vec![0.0; n];
    let onsets: Vec<usize> = changes.iter().map(|c| (c.onset / DT).round() as usize).collect();
    for k in 0..n {
        let active = onsets
            .iter()
            .zip(changes)
            .rfind(|(s, _)| **s <= k)
            .map(|(_, c)| c);
        let mut landed = None;
        let a = match active {
            Some(c) => {
                let needed = (c.target - vx[k]) / DT;
                if needed.abs() <= c.rate {
                    landed = Some(c.target);
                    if needed.abs() < 1e-12 {
                        0.0
                    } else {
                        needed
                    }
                } else {
                    c.rate * needed.signum()
                }
            }
            None => 0.0,
        };
        ax[k] = a;
        if k + 1 < n {
            x[k + 1] = x[k] + vx[k] * DT + 0.5 * a * DT * DT;
            vx[k + 1] = landed.unwrap_or(vx[k] + a * DT);
        }
    }
    LongitudinalProfile { x, vx, ax }
}

/// Duration of the constant-deceleration phase from `cruise_kmh` down to
/// 60 km/h at `brake` m/s².
pub fn braking_duration(cruise_kmh: f64, brake: f64) -> f64 {
    kmh_to_ms(cruise_kmh - LOW_SPEED_KMH) / brake.abs()
}

/// Cruise, brake to 60 km/h at `brake` from `brake_onset`, then recover to
/// the cruise speed at `recovery_accel` from `recovery_onset`.
pub fn longitudinal_profile(
    cruise_kmh: f64,
    brake: f64,
    anchors: &Anchors,
    recovery_accel: f64,
    duration: f64,
) -> Result<LongitudinalProfile> {
    if !(brake < 0.0) {
        return Err(Error::InvalidSpec(format!("braking intensity {brake} must be negative")));
    }
    if !(cruise_kmh > LOW_SPEED_KMH) {
        return Err(Error::InvalidSpec(format!("cruise speed {cruise_kmh} km/h must exceed 60 km/h")));
    }
    let brake_onset = anchors
        .brake_onset
        .ok_or_else(|| Error::InvalidSpec("missing brake_onset anchor".into()))?;
    let brake_end = brake_onset + braking_duration(cruise_kmh, brake);
    if brake_end > duration + 1e-9 {
        return Err(Error::NoRoomForBraking(format!(
            "braking ends at {brake_end:.2} s, after the {duration} s event"
        )));
    }
    let mut changes = vec![SpeedChange {
        onset: brake_onset,
        target: kmh_to_ms(LOW_SPEED_KMH),
        rate: brake.abs(),
    }];
    if let Some(rec) = anchors.recovery_onset {
        if rec < brake_end - 1e-9 {
            return Err(Error::NoRoomForBraking(format!(
                "recovery at {rec:.2} s precedes the end of braking at {brake_end:.2} s"
            )));
        }
        changes.push(SpeedChange {
            onset: rec,
            target: kmh_to_ms(cruise_kmh),
            rate: recovery_accel,
        });
    }
    Ok(speed_schedule(kmh_to_ms(cruise_kmh), &changes, duration))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchors(brake: f64, rec: Option<f64>) -> Anchors {
        Anchors {
            merge_onset: None,
            brake_onset: Some(brake),
            recovery_onset: rec,
        }
    }

    #[test]
    fn normal_slow_crosses_in_lane_width_over_speed() {
        let p = lateral_profile(LateralCategory::NormalSlow, 5.0, 3.5, 36.0).unwrap();
        assert!((p.crossing_time - 3.5).abs() < 1e-9);
        assert!((p.plateau_speed - 1.0).abs() < 1e-12);
        assert!((p.y.last().unwrap() - 3.5).abs() < 1e-12);
        let vmax = p.vy.iter().cloned().fold(0.0, f64::max);
        assert!((vmax - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normal_fast_plateau_near_three() {
        let p = lateral_profile(LateralCategory::NormalFast, 5.0, 3.5, 36.0).unwrap();
        assert!((p.plateau_speed - 3.0).abs() / 3.0 < 0.03);
        assert!((p.crossing_time - 3.5 / p.plateau_speed).abs() < 1e-9);
    }

    #[test]
    fn fragmented_holds_six_seconds_at_midline() {
        let p = lateral_profile(LateralCategory::Fragmented, 12.0, 3.5, 36.0).unwrap();
        let (a, b) = p.hold.unwrap();
        assert!((b - a - 6.0).abs() < 1e-9);
        let ka = (a / DT).round() as usize;
        let kb = (b / DT).round() as usize;
        for k in ka..=kb {
            assert!((p.y[k] - 1.75).abs() < 1e-9, "y[{k}] = {}", p.y[k]);
        }
        assert!(p.vy[ka + 1] == 0.0 && p.vy[kb - 1] == 0.0);
        assert!(p.vy[kb + 1] > 0.0);
        assert!((p.y.last().unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn aborted_returns_to_start() {
        let p = lateral_profile(LateralCategory::Aborted, 12.0, 3.5, 36.0).unwrap();
        assert!((p.y.last().unwrap() - p.y[0]).abs() < 1e-9);
        let peak = p.y.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 1.75).abs() < 1e-9);
    }

    #[test]
    fn unknown_category_rejected() {
        assert!(matches!(LateralCategory::parse("diagonal"), Err(Error::UnknownCategory(_))));
        assert_eq!(LateralCategory::parse("fragmented").unwrap(), LateralCategory::Fragmented);
    }

    #[test]
    fn onset_outside_duration_rejected() {
        assert!(lateral_profile(LateralCategory::NormalSlow, 40.0, 3.5, 36.0).is_err());
    }

    #[test]
    fn braking_durations() {
        assert!((braking_duration(120.0, -5.0) - 60.0 / 3.6 / 5.0).abs() < 1e-12);
        assert!((braking_duration(120.0, -5.0) - 3.3333).abs() < 1e-3);
        assert!((braking_duration(80.0, -2.0) - 2.7778).abs() < 1e-3);
    }

    #[test]
    fn cruise_before_brake_onset() {
        let p = longitudinal_profile(120.0, -5.0, &anchors(12.0, Some(18.0)), 1.5, 30.0).unwrap();
        for k in 0..120 {
            assert_eq!(p.vx[k], 120.0 / 3.6);
            assert_eq!(p.ax[k], 0.0);
        }
        assert_eq!(p.ax[120], -5.0);
    }

    #[test]
    fn braking_reaches_sixty_after_expected_time() {
        let p = longitudinal_profile(120.0, -5.0, &anchors(12.0, Some(18.0)), 1.5, 30.0).unwrap();
        let low = 60.0 / 3.6;
        let k = p.vx.iter().position(|&v| v == low).unwrap();
        let t = k as f64 * DT;
        let expected = 12.0 + braking_duration(120.0, -5.0);
        assert!(t >= expected - 1e-9 && t < expected + DT + 1e-9, "t={t}");
        // held until recovery, then back to cruise
        assert_eq!(p.vx[179], low);
        assert!(p.vx[181] > low);
        assert!(p.vx.iter().all(|&v| v >= low - 1e-12 && v <= 120.0 / 3.6 + 1e-12));
    }

    #[test]
    fn position_is_exact_integral() {
        let p = longitudinal_profile(100.0, -8.0, &anchors(12.0, Some(16.0)), 1.5, 30.0).unwrap();
        for k in 0..p.x.len() - 1 {
            let dx = p.x[k + 1] - p.x[k];
            let exact = p.vx[k] * DT + 0.5 * p.ax[k] * DT * DT;
            assert!((dx - exact).abs() < 1e-9);
            assert!((p.vx[k + 1] - p.vx[k] - p.ax[k] * DT).abs() < 1e-9);
        }
    }

    #[test]
    fn no_room_for_braking_rejected() {
        let err = longitudinal_profile(120.0, -2.0, &anchors(12.0, Some(14.0)), 1.5, 30.0).unwrap_err();
        assert!(matches!(err, Error::NoRoomForBraking(_)));
        let err = longitudinal_profile(120.0, -2.0, &anchors(25.0, None), 1.5, 30.0).unwrap_err();
        assert!(matches!(err, Error::NoRoomForBraking(_)));
        assert!(longitudinal_profile(120.0, 2.0, &anchors(12.0, None), 1.5, 30.0).is_err());
        assert!(longitudinal_profile(50.0, -2.0, &anchors(12.0, None), 1.5, 30.0).is_err());
    }
}
