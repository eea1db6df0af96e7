use serde::{Deserialize, Serialize};

/// Where the subject's desired gap to an in-path lead comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapReference {
    /// Hold the event's designed bumper gap.
    Designed,
    /// `standstill + time_headway * v`.
    Headway { time_headway: f64, standstill: f64 },
}

/// Proportional gap-and-speed controller of the subject vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub reference: GapReference,
    pub gap_gain: f64,
    pub speed_gain: f64,
    pub cruise_gain: f64,
    pub max_accel: f64,
    /// Magnitude of the strongest deceleration the controller may command.
    pub max_decel: f64,
}

impl ControllerParams {
    /// Tight car-following used in MB, HB and SVM.
    pub fn designed_gap() -> Self {
        Self {
            reference: GapReference::Designed,
            gap_gain: 4.0,
            speed_gain: 4.0,
            cruise_gain: 0.5,
            max_accel: 2.5,
            max_decel: 9.5,
        }
    }

    pub fn cautious() -> Self {
        Self {
            reference: GapReference::Headway {
                time_headway: 2.0,
                standstill: 2.0,
            },
            gap_gain: 0.12,
            speed_gain: 0.9,
            cruise_gain: 0.3,
            max_accel: 1.5,
            max_decel: 5.0,
        }
    }

    pub fn mild() -> Self {
        Self {
            reference: GapReference::Headway {
                time_headway: 1.5,
                standstill: 2.0,
            },
            gap_gain: 0.08,
            speed_gain: 0.6,
            cruise_gain: 0.4,
            max_accel: 2.0,
            max_decel: 4.0,
        }
    }

    pub fn aggressive() -> Self {
        Self {
            reference: GapReference::Headway {
                time_headway: 1.0,
                standstill: 2.0,
            },
            gap_gain: 0.05,
            speed_gain: 0.4,
            cruise_gain: 0.5,
            max_accel: 2.5,
            max_decel: 3.0,
        }
    }

    pub fn desired_gap(&self, designed: f64, speed: f64) -> f64 {
        match self.reference {
            GapReference::Designed => designed,
            GapReference::Headway {
                time_headway,
                standstill,
            } => standstill + time_headway * speed,
        }
    }

    fn clamp(&self, a: f64) -> f64 {
        a.clamp(-self.max_decel, self.max_accel)
    }

    pub fn cruise(&self, speed: f64, set_speed: f64) -> f64 {
        self.clamp(self.cruise_gain * (set_speed - speed))
    }

    /// Commanded acceleration given an optional in-path lead as
    /// `(bumper_gap, lead_speed)`.
    pub fn command(&self, speed: f64, set_speed: f64, lead: Option<(f64, f64)>, designed_gap: f64) -> f64 {
        let cruise = self.cruise(speed, set_speed);
        match lead {
            None => cruise,
            Some((gap, lead_speed)) => {
                let follow = self.gap_gain * (gap - self.desired_gap(designed_gap, speed))
                    + self.speed_gain * (lead_speed - speed);
                cruise.min(self.clamp(follow))
            }
        }
    }
}
