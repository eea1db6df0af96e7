use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::controller::ControllerParams;
use super::profiles::{
    braking_duration, lateral_profile_with_ramp, longitudinal_profile, merge_profile, speed_schedule,
    LateralCategory, LateralProfile, LongitudinalProfile, SpeedChange, LOW_SPEED_KMH,
};
use super::{kmh_to_ms, sample_count, AccCategory, Anchors, EventSpec, Family, Scenario, DT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub subject: VehicleState,
    /// Lead (or merging / lane-changing) vehicle first; the SVM follower second.
    pub neighbours: Vec<VehicleState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrajectory {
    pub event_id: u32,
    pub scenario: Scenario,
    pub dt: f64,
    pub frames: Vec<Frame>,
}

impl EventTrajectory {
    pub fn duration(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.t)
    }

    /// Bumper-to-bumper longitudinal gap to neighbour `n` at frame `k`
    /// (positive while the neighbour is ahead and clear).
    pub fn longitudinal_gap(&self, k: usize, n: usize) -> f64 {
        let f = &self.frames[k];
        let nb = &f.neighbours[n];
        (nb.x - f.subject.x).abs() - 0.5 * (nb.length + f.subject.length)
    }
}

/// Tunables of the trajectory synthesizer. Defaults reproduce the shipped
/// catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub lane_width: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    /// Acceleration used when a braked vehicle returns to cruise, m/s².
    pub recovery_accel: f64,
    pub lateral_ramp: f64,
    /// Lateral speed of on-ramp merges (MB neighbour, SVM subject), m/s.
    pub merge_lateral_speed: f64,
    /// Subject lane-keeping sway acceleration magnitude, m/s².
    pub sway_accel: f64,
    pub sway_period: f64,
    /// Lane-keeping sway of the SVM main-lane traffic, m/s².
    pub traffic_sway_accel: f64,
    pub lc_cruise_kmh: f64,
    /// LC neighbour speed excess while approaching from behind, km/h.
    pub lc_approach_delta_kmh: f64,
    /// LC neighbour speed deficit after cutting in, km/h.
    pub lc_slow_delta_kmh: f64,
    pub lc_decel: f64,
    pub svm_follower_gap: f64,
    pub svm_follower_delay: f64,
    pub in_path_margin: f64,
    pub follow: ControllerParams,
    pub cautious: ControllerParams,
    pub mild: ControllerParams,
    pub aggressive: ControllerParams,
    pub hb_brake_onset: f64,
    pub mb_merge_onset: f64,
    pub mb_brake_onset: f64,
    pub lc_merge_onset: f64,
    pub svm_merge_onset: f64,
    pub svm_recovery_delay: f64,
    /// Time the braked vehicle holds 60 km/h before recovering, s.
    pub recovery_hold: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lane_width: 3.5,
            vehicle_length: 4.5,
            vehicle_width: 2.0,
            recovery_accel: 1.5,
            lateral_ramp: 1.0,
            merge_lateral_speed: 1.5,
            sway_accel: 0.02,
            sway_period: 8.0,
            traffic_sway_accel: 0.015,
            lc_cruise_kmh: 100.0,
            lc_approach_delta_kmh: 10.0,
            lc_slow_delta_kmh: 10.0,
            lc_decel: 1.0,
            svm_follower_gap: 12.0,
            svm_follower_delay: 1.0,
            in_path_margin: 0.3,
            follow: ControllerParams::designed_gap(),
            cautious: ControllerParams::cautious(),
            mild: ControllerParams::mild(),
            aggressive: ControllerParams::aggressive(),
            hb_brake_onset: 12.0,
            mb_merge_onset: 10.0,
            mb_brake_onset: 14.0,
            lc_merge_onset: 12.0,
            svm_merge_onset: 12.0,
            svm_recovery_delay: 4.0,
            recovery_hold: 1.0,
        }
    }
}

fn grid_ceil(t: f64) -> f64 {
    ((t / DT - 1e-9).ceil() * DT * 1e6).round() / 1e6
}

impl SimConfig {
    /// Fills in the default timeline anchors for `spec`'s scenario.
    pub fn with_default_anchors(&self, mut spec: EventSpec) -> EventSpec {
        let braking = |s: &EventSpec| {
            braking_duration(
                s.cruise_speed.unwrap_or(LOW_SPEED_KMH + 1.0),
                s.braking_intensity.unwrap_or(-1.0),
            )
        };
        spec.anchors = match spec.family() {
            Family::Hb => {
                let brake = self.hb_brake_onset;
                Anchors {
                    merge_onset: None,
                    brake_onset: Some(brake),
                    recovery_onset: Some(grid_ceil(brake + braking(&spec)) + self.recovery_hold),
                }
            }
            Family::Mb => {
                let brake = self.mb_brake_onset;
                Anchors {
                    merge_onset: Some(self.mb_merge_onset),
                    brake_onset: Some(brake),
                    recovery_onset: Some(grid_ceil(brake + braking(&spec)) + self.recovery_hold),
                }
            }
            Family::Lc => Anchors {
                merge_onset: Some(self.lc_merge_onset),
                brake_onset: None,
                recovery_onset: None,
            },
            Family::Svm => {
                let merge = self.svm_merge_onset;
                Anchors {
                    merge_onset: Some(merge),
                    brake_onset: Some(((merge - grid_ceil(braking(&spec))) * 1e6).round() / 1e6),
                    recovery_onset: Some(merge + self.svm_recovery_delay),
                }
            }
        };
        spec
    }

    fn controller(&self, acc: Option<AccCategory>) -> ControllerParams {
        match acc {
            Some(AccCategory::Cautious) => self.cautious,
            Some(AccCategory::Mild) => self.mild,
            Some(AccCategory::Aggressive) => self.aggressive,
            None => self.follow,
        }
    }

    fn sway(&self, k: usize) -> f64 {
        self.sway_pattern(k, self.sway_accel)
    }

    fn sway_pattern(&self, k: usize, accel: f64) -> f64 {
        let period = ((self.sway_period / DT).round() as usize).max(4);
        let quarter = period / 4;
        let phase = k % period;
        if phase < quarter || phase >= period - quarter {
            accel
        } else {
            -accel
        }
    }

    /// Sway track `(y, vy, ay)` started `phase` steps into the pattern.
    fn sway_track(&self, n: usize, accel: f64, phase: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(n);
        let (mut y, mut vy) = (0.0, 0.0);
        for k in 0..phase + n {
            let a = self.sway_pattern(k, accel);
            if k >= phase {
                out.push((y, vy, a));
            }
            y += vy * DT + 0.5 * a * DT * DT;
            vy += a * DT;
        }
        out
    }
}

/// A neighbour whose motion is fully scripted.
struct Scripted {
    x0: f64,
    y0: f64,
    lat_sign: f64,
    long: LongitudinalProfile,
    lat: Option<LateralProfile>,
    sway: Vec<(f64, f64, f64)>,
}

impl Scripted {
    fn state(&self, k: usize, cfg: &SimConfig) -> VehicleState {
        let (y, vy, ay) = match &self.lat {
            Some(p) => (p.y[k], p.vy[k], p.ay[k]),
            None => (0.0, 0.0, 0.0),
        };
        let (sy, svy, say) = self.sway.get(k).copied().unwrap_or_default();
        VehicleState {
            x: self.x0 + self.long.x[k],
            y: self.y0 + self.lat_sign * y + sy,
            vx: self.long.vx[k],
            vy: self.lat_sign * vy + svy,
            ax: self.long.ax[k],
            ay: self.lat_sign * ay + say,
            length: cfg.vehicle_length,
            width: cfg.vehicle_width,
        }
    }
}

/// How a scripted neighbour is positioned once the subject's motion is known.
enum Placement {
    /// Bumper gap ahead of the subject at the anchor step.
    Ahead(f64),
    /// Bumper gap behind the subject at the anchor step.
    Behind(f64),
}

struct SubjectPlan {
    set_speed: f64,
    controller: ControllerParams,
    designed_gap: f64,
    /// Scripted longitudinal accelerations used before `scripted_until`.
    scripted: Option<(LongitudinalProfile, usize)>,
    lateral: Option<LateralProfile>,
    y0: f64,
}

struct Setup {
    subject: SubjectPlan,
    neighbours: Vec<(Scripted, Placement)>,
    anchor_step: usize,
}

fn build_setup(spec: &EventSpec, cfg: &SimConfig) -> Result<Setup> {
    spec.validate()?;
    let duration = spec.duration;
    let n = sample_count(duration);
    let lane = cfg.lane_width;
    let step = |t: f64| (t / DT).round() as usize;
    let require = |a: Option<f64>, name: &str| {
        a.ok_or_else(|| Error::InvalidSpec(format!("event {}: missing {name} anchor", spec.event_id)))
    };
    let setup = match spec.family() {
        Family::Hb | Family::Mb => {
            let cruise = spec.cruise_speed.unwrap_or_default();
            let brake = spec.braking_intensity.unwrap_or_default();
            let long = longitudinal_profile(cruise, brake, &spec.anchors, cfg.recovery_accel, duration)?;
            let (lat, y0, anchor_step) = if spec.family() == Family::Mb {
                let merge = require(spec.anchors.merge_onset, "merge_onset")?;
                let p = merge_profile(merge, lane, cfg.merge_lateral_speed, duration, cfg.lateral_ramp)?;
                (Some(p), -lane, step(merge))
            } else {
                (None, 0.0, 0)
            };
            Setup {
                subject: SubjectPlan {
                    set_speed: kmh_to_ms(cruise),
                    controller: cfg.follow,
                    designed_gap: spec.initial_distance,
                    scripted: None,
                    lateral: None,
                    y0: 0.0,
                },
                neighbours: vec![(
                    Scripted {
                        x0: 0.0,
                        y0,
                        lat_sign: 1.0,
                        long,
                        lat,
                        sway: Vec::new(),
                    },
                    Placement::Ahead(spec.initial_distance),
                )],
                anchor_step,
            }
        }
        Family::Lc => {
            let merge = require(spec.anchors.merge_onset, "merge_onset")?;
            let category = LateralCategory::from_scenario(spec.scenario)
                .ok_or_else(|| Error::InvalidSpec(format!("{} is not an LC scenario", spec.scenario)))?;
            let lat = lateral_profile_with_ramp(category, merge, lane, duration, cfg.lateral_ramp)?;
            let v = kmh_to_ms(cfg.lc_cruise_kmh);
            let long = speed_schedule(
                v + kmh_to_ms(cfg.lc_approach_delta_kmh),
                &[SpeedChange {
                    onset: merge,
                    target: v - kmh_to_ms(cfg.lc_slow_delta_kmh),
                    rate: cfg.lc_decel,
                }],
                duration,
            );
            Setup {
                subject: SubjectPlan {
                    set_speed: v,
                    controller: cfg.controller(spec.acc_category),
                    designed_gap: spec.initial_distance,
                    scripted: None,
                    lateral: None,
                    y0: 0.0,
                },
                neighbours: vec![(
                    Scripted {
                        x0: 0.0,
                        y0: lane,
                        lat_sign: -1.0,
                        long,
                        lat: Some(lat),
                        sway: Vec::new(),
                    },
                    Placement::Ahead(spec.initial_distance),
                )],
                anchor_step: step(merge),
            }
        }
        Family::Svm => {
            let merge = require(spec.anchors.merge_onset, "merge_onset")?;
            let brake_onset = require(spec.anchors.brake_onset, "brake_onset")?;
            let recovery = require(spec.anchors.recovery_onset, "recovery_onset")?;
            let cruise = spec.cruise_speed.unwrap_or_default();
            let brake = spec.braking_intensity.unwrap_or_default();
            if brake_onset + braking_duration(cruise, brake) > merge + 1e-9 {
                return Err(Error::NoRoomForBraking(format!(
                    "event {}: subject still braking at merge onset {merge} s",
                    spec.event_id
                )));
            }
            let low = kmh_to_ms(LOW_SPEED_KMH);
            let subject_long = speed_schedule(
                kmh_to_ms(cruise),
                &[SpeedChange {
                    onset: brake_onset,
                    target: low,
                    rate: brake.abs(),
                }],
                duration,
            );
            let traffic = |onset: f64| {
                speed_schedule(
                    low,
                    &[SpeedChange {
                        onset,
                        target: kmh_to_ms(cruise),
                        rate: cfg.recovery_accel,
                    }],
                    duration,
                )
            };
            let lat = merge_profile(merge, lane, cfg.merge_lateral_speed, duration, cfg.lateral_ramp)?;
            Setup {
                subject: SubjectPlan {
                    set_speed: kmh_to_ms(cruise),
                    controller: cfg.follow,
                    designed_gap: spec.initial_distance,
                    scripted: Some((subject_long, step(merge))),
                    lateral: Some(lat),
                    y0: -lane,
                },
                neighbours: vec![
                    (
                        Scripted {
                            x0: 0.0,
                            y0: 0.0,
                            lat_sign: 1.0,
                            long: traffic(recovery),
                            lat: None,
                            sway: cfg.sway_track(n, cfg.traffic_sway_accel, 30),
                        },
                        Placement::Ahead(spec.initial_distance),
                    ),
                    (
                        Scripted {
                            x0: 0.0,
                            y0: 0.0,
                            lat_sign: 1.0,
                            long: traffic(recovery + cfg.svm_follower_delay),
                            lat: None,
                            sway: cfg.sway_track(n, -cfg.traffic_sway_accel, 50),
                        },
                        Placement::Behind(cfg.svm_follower_gap),
                    ),
                ],
                anchor_step: step(merge),
            }
        }
    };
    debug_assert!(setup.anchor_step < n);
    Ok(setup)
}

fn run(spec: &EventSpec, setup: &Setup, cfg: &SimConfig) -> EventTrajectory {
    let n = sample_count(spec.duration);
    let plan = &setup.subject;
    let mut frames = Vec::with_capacity(n);
    let mut x = 0.0;
    let mut vx = plan.set_speed;
    let mut y_sway = 0.0;
    let mut vy_sway = 0.0;
    for k in 0..n {
        let neighbours: Vec<VehicleState> = setup.neighbours.iter().map(|(s, _)| s.state(k, cfg)).collect();
        let ax = match &plan.scripted {
            Some((long, until)) if k < *until => long.ax[k],
            _ => {
                let half_widths = cfg.vehicle_width + cfg.in_path_margin;
                let lead = neighbours
                    .iter()
                    .filter(|nb| nb.x > x && nb.y.abs() < half_widths)
                    .min_by(|a, b| a.x.total_cmp(&b.x))
                    .map(|nb| (nb.x - x - 0.5 * (nb.length + cfg.vehicle_length), nb.vx));
                plan.controller.command(vx, plan.set_speed, lead, plan.designed_gap)
            }
        };
        let sway_a = cfg.sway(k);
        let (lat_y, lat_vy, lat_ay) = match &plan.lateral {
            Some(p) => (p.y[k], p.vy[k], p.ay[k]),
            None => (0.0, 0.0, 0.0),
        };
        frames.push(Frame {
            t: ((k as f64 * DT) * 1e9).round() / 1e9,
            subject: VehicleState {
                x,
                y: plan.y0 + lat_y + y_sway,
                vx,
                vy: lat_vy + vy_sway,
                ax,
                ay: lat_ay + sway_a,
                length: cfg.vehicle_length,
                width: cfg.vehicle_width,
            },
            neighbours,
        });
        x += vx * DT + 0.5 * ax * DT * DT;
        vx += ax * DT;
        y_sway += vy_sway * DT + 0.5 * sway_a * DT * DT;
        vy_sway += sway_a * DT;
    }
    EventTrajectory {
        event_id: spec.event_id,
        scenario: spec.scenario,
        dt: DT,
        frames,
    }
}

/// Synthesizes the 10 Hz trajectory of one event with the default
/// [`SimConfig`].
pub fn simulate_event(spec: &EventSpec) -> Result<EventTrajectory> {
    simulate_event_with(spec, &SimConfig::default())
}

pub fn simulate_event_with(spec: &EventSpec, cfg: &SimConfig) -> Result<EventTrajectory> {
    let mut setup = build_setup(spec, cfg)?;
    // The subject's motion up to the anchor does not depend on the
    // neighbours, so one provisional pass fixes their placement.
    let provisional = run(spec, &setup, cfg);
    let k = setup.anchor_step;
    let subject_x = provisional.frames[k].subject.x;
    let len = cfg.vehicle_length;
    for (scripted, placement) in &mut setup.neighbours {
        let rel = scripted.long.x[k];
        scripted.x0 = match placement {
            Placement::Ahead(gap) => subject_x + len + *gap - rel,
            Placement::Behind(gap) => subject_x - len - *gap - rel,
        };
    }
    Ok(run(spec, &setup, cfg))
}

/// Renders a trajectory as CSV with six-decimal floats. `n2_*` columns are
/// left empty when the event has a single neighbour.
pub fn trajectory_csv(traj: &EventTrajectory) -> String {
    let mut out = String::from("t");
    for p in ["sub", "n1", "n2"] {
        for c in ["x", "y", "vx", "vy", "ax", "ay"] {
            let _ = write!(out, ",{p}_{c}");
        }
    }
    out.push('\n');
    for f in &traj.frames {
        let _ = write!(out, "{:.6}", f.t);
        let mut push = |v: Option<&VehicleState>| match v {
            Some(s) => {
                for c in [s.x, s.y, s.vx, s.vy, s.ax, s.ay] {
                    let _ = write!(out, ",{c:.6}");
                }
            }
            None => out.push_str(",,,,,,"),
        };
        push(Some(&f.subject));
        push(f.neighbours.first());
        push(f.neighbours.get(1));
        out.push('\n');
    }
    out
}
