use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "MB")]
    Mb,
    #[serde(rename = "HB")]
    Hb,
    #[serde(rename = "LC_normal_slow")]
    LcNormalSlow,
    #[serde(rename = "LC_normal_fast")]
    LcNormalFast,
    #[serde(rename = "LC_fragmented")]
    LcFragmented,
    #[serde(rename = "LC_aborted")]
    LcAborted,
    #[serde(rename = "SVM")]
    Svm,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Mb,
        Scenario::Hb,
        Scenario::LcNormalSlow,
        Scenario::LcNormalFast,
        Scenario::LcFragmented,
        Scenario::LcAborted,
        Scenario::Svm,
    ];

    pub fn family(self) -> Family {
        match self {
            Scenario::Mb => Family::Mb,
            Scenario::Hb => Family::Hb,
            Scenario::Svm => Family::Svm,
            _ => Family::Lc,
        }
    }

    pub fn model_group(self) -> ModelGroup {
        match self {
            Scenario::Mb => ModelGroup::Mb,
            Scenario::Hb => ModelGroup::Hb,
            Scenario::LcNormalSlow | Scenario::LcNormalFast => ModelGroup::LcNormal,
            Scenario::LcFragmented => ModelGroup::LcFragmented,
            Scenario::LcAborted => ModelGroup::LcAborted,
            Scenario::Svm => ModelGroup::Svm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Mb => "MB",
            Scenario::Hb => "HB",
            Scenario::LcNormalSlow => "LC_normal_slow",
            Scenario::LcNormalFast => "LC_normal_fast",
            Scenario::LcFragmented => "LC_fragmented",
            Scenario::LcAborted => "LC_aborted",
            Scenario::Svm => "SVM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown scenario `{s}`")))
    }

    /// Number of neighbouring vehicles simulated for this scenario.
    pub fn neighbour_count(self) -> usize {
        if self == Scenario::Svm {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four scenario families of the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "MB")]
    Mb,
    #[serde(rename = "HB")]
    Hb,
    #[serde(rename = "LC")]
    Lc,
    #[serde(rename = "SVM")]
    Svm,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Mb, Family::Hb, Family::Lc, Family::Svm];

    pub fn name(self) -> &'static str {
        match self {
            Family::Mb => "MB",
            Family::Hb => "HB",
            Family::Lc => "LC",
            Family::Svm => "SVM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown scenario family `{s}`")))
    }

    pub fn duration(self) -> f64 {
        match self {
            Family::Lc => 36.0,
            _ => 30.0,
        }
    }

    /// Number of 6 s clips (and therefore ratings) per event.
    pub fn clip_count(self) -> usize {
        match self {
            Family::Lc => 6,
            _ => 5,
        }
    }

    /// First global event id of the family; ids are contiguous per family.
    pub fn first_event_id(self) -> u32 {
        match self {
            Family::Mb => 1,
            Family::Hb => 28,
            Family::Lc => 55,
            Family::Svm => 79,
        }
    }

    pub fn event_count(self) -> u32 {
        match self {
            Family::Lc => 24,
            _ => 27,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the six per-scenario surrogate networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelGroup {
    #[serde(rename = "MB")]
    Mb,
    #[serde(rename = "HB")]
    Hb,
    #[serde(rename = "LC_normal")]
    LcNormal,
    #[serde(rename = "LC_fragmented")]
    LcFragmented,
    #[serde(rename = "LC_aborted")]
    LcAborted,
    #[serde(rename = "SVM")]
    Svm,
}

impl ModelGroup {
    pub const ALL: [ModelGroup; 6] = [
        ModelGroup::Mb,
        ModelGroup::Hb,
        ModelGroup::LcNormal,
        ModelGroup::LcFragmented,
        ModelGroup::LcAborted,
        ModelGroup::Svm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelGroup::Mb => "MB",
            ModelGroup::Hb => "HB",
            ModelGroup::LcNormal => "LC_normal",
            ModelGroup::LcFragmented => "LC_fragmented",
            ModelGroup::LcAborted => "LC_aborted",
            ModelGroup::Svm => "SVM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ModelGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown model group `{s}`")))
    }

    pub fn family(self) -> Family {
        match self {
            ModelGroup::Mb => Family::Mb,
            ModelGroup::Hb => Family::Hb,
            ModelGroup::Svm => Family::Svm,
            _ => Family::Lc,
        }
    }
}

impl fmt::Display for ModelGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccCategory {
    Cautious,
    Mild,
    Aggressive,
}

impl AccCategory {
    pub const ALL: [AccCategory; 3] = [AccCategory::Cautious, AccCategory::Mild, AccCategory::Aggressive];
}

/// Event-phase onset times in seconds. Only the anchors relevant to a
/// scenario are set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub merge_onset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub brake_onset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovery_onset: Option<f64>,
}

impl Anchors {
    /// Anchors in chronological order.
    pub fn sorted(&self) -> Vec<(&'static str, f64)> {
        let mut v: Vec<(&'static str, f64)> = [
            ("merge_onset", self.merge_onset),
            ("brake_onset", self.brake_onset),
            ("recovery_onset", self.recovery_onset),
        ]
        .into_iter()
        .filter_map(|(n, t)| t.map(|t| (n, t)))
        .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub event_id: u32,
    pub scenario: Scenario,
    /// Bumper-to-bumper gap in metres at the scenario-defining anchor.
    pub initial_distance: f64,
    /// km/h; MB, HB and SVM only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cruise_speed: Option<f64>,
    /// m/s², negative; MB, HB and SVM only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub braking_intensity: Option<f64>,
    /// LC only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub acc_category: Option<AccCategory>,
    pub duration: f64,
    pub anchors: Anchors,
}

impl EventSpec {
    pub fn family(&self) -> Family {
        self.scenario.family()
    }

    /// 1-based position of the event within its family (the row number of
    /// the family's rating-moment table).
    pub fn family_index(&self) -> u32 {
        self.event_id + 1 - self.family().first_event_id()
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family();
        if (self.duration - fam.duration()).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "event {}: duration {} s, expected {} s",
                self.event_id,
                self.duration,
                fam.duration()
            )));
        }
        if !(self.initial_distance > 0.0 && self.initial_distance.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "event {}: initial distance must be positive",
                self.event_id
            )));
        }
        match fam {
            Family::Lc => {
                if self.acc_category.is_none() {
                    return Err(Error::InvalidSpec(format!(
                        "event {}: LC events need an ACC category",
                        self.event_id
                    )));
                }
            }
            _ => {
                let cruise = self.cruise_speed.ok_or_else(|| {
                    Error::InvalidSpec(format!("event {}: missing cruise speed", self.event_id))
                })?;
                let brake = self.braking_intensity.ok_or_else(|| {
                    Error::InvalidSpec(format!("event {}: missing braking intensity", self.event_id))
                })?;
                if !(brake < 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "event {}: braking intensity must be negative",
                        self.event_id
                    )));
                }
                if !(cruise > 60.0) {
                    return Err(Error::InvalidSpec(format!(
                        "event {}: cruise speed must exceed 60 km/h",
                        self.event_id
                    )));
                }
            }
        }
        let sorted = self.anchors.sorted();
        for (name, t) in &sorted {
            if !(0.0..=self.duration).contains(t) {
                return Err(Error::InvalidSpec(format!(
                    "event {}: anchor {name} = {t} outside [0, {}]",
                    self.event_id, self.duration
                )));
            }
        }
        for w in sorted.windows(2) {
            if w[1].1 <= w[0].1 {
                return Err(Error::InvalidSpec(format!(
                    "event {}: anchors {} and {} coincide",
                    self.event_id, w[0].0, w[1].0
                )));
            }
        }
        Ok(())
    }
}

const DISTANCES: [f64; 3] = [5.0, 15.0, 25.0];
const LC_DISTANCES: [f64; 2] = [5.0, 15.0];
const SPEEDS: [f64; 3] = [80.0, 100.0, 120.0];
const INTENSITIES: [f64; 3] = [-2.0, -5.0, -8.0];
const LC_LATERAL: [Scenario; 4] = [
    Scenario::LcNormalSlow,
    Scenario::LcNormalFast,
    Scenario::LcFragmented,
    Scenario::LcAborted,
];

/// The full 105-event catalog with default timeline anchors.
///
/// MB, HB and SVM iterate distance, then cruise speed, then braking
/// intensity. LC iterates lateral category, then ACC category, then
/// distance, so that event numbers line up with the LC rating-moment table
/// (normal rows first, then fragmented, then aborted).
pub fn enumerate_events() -> Vec<EventSpec> {
    let cfg = super::SimConfig::default();
    let mut out = Vec::with_capacity(105);
    let mut id = 1;
    for scenario in [Scenario::Mb, Scenario::Hb] {
        for d in DISTANCES {
            for v in SPEEDS {
                for b in INTENSITIES {
                    out.push(cfg.with_default_anchors(EventSpec {
                        event_id: id,
                        scenario,
                        initial_distance: d,
                        cruise_speed: Some(v),
                        braking_intensity: Some(b),
                        acc_category: None,
                        duration: 30.0,
                        anchors: Anchors::default(),
                    }));
                    id += 1;
                }
            }
        }
    }
    for scenario in LC_LATERAL {
        for acc in AccCategory::ALL {
            for d in LC_DISTANCES {
                out.push(cfg.with_default_anchors(EventSpec {
                    event_id: id,
                    scenario,
                    initial_distance: d,
                    cruise_speed: None,
                    braking_intensity: None,
                    acc_category: Some(acc),
                    duration: 36.0,
                    anchors: Anchors::default(),
                }));
                id += 1;
            }
        }
    }
    for d in DISTANCES {
        for v in SPEEDS {
            for b in INTENSITIES {
                out.push(cfg.with_default_anchors(EventSpec {
                    event_id: id,
                    scenario: Scenario::Svm,
                    initial_distance: d,
                    cruise_speed: Some(v),
                    braking_intensity: Some(b),
                    acc_category: None,
                    duration: 30.0,
                    anchors: Anchors::default(),
                }));
                id += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_counts() {
        let events = enumerate_events();
        assert_eq!(events.len(), 105);
        let count = |f: Family| events.iter().filter(|e| e.family() == f).count();
        assert_eq!(count(Family::Mb), 27);
        assert_eq!(count(Family::Hb), 27);
        assert_eq!(count(Family::Lc), 24);
        assert_eq!(count(Family::Svm), 27);
        for (i, e) in events.iter().enumerate() {
            assert_eq!(e.event_id as usize, i + 1);
            e.validate().unwrap();
        }
    }

    #[test]
    fn family_ids_are_contiguous() {
        let events = enumerate_events();
        for fam in Family::ALL {
            let ids: Vec<u32> = events.iter().filter(|e| e.family() == fam).map(|e| e.event_id).collect();
            assert_eq!(ids[0], fam.first_event_id());
            assert_eq!(ids.len() as u32, fam.event_count());
            assert!(ids.windows(2).all(|w| w[1] == w[0] + 1));
        }
    }

    #[test]
    fn mb_grid_ordering() {
        let events = enumerate_events();
        let first = &events[0];
        assert_eq!(first.initial_distance, 5.0);
        assert_eq!(first.cruise_speed, Some(80.0));
        assert_eq!(first.braking_intensity, Some(-2.0));
        let second = &events[1];
        assert_eq!(second.braking_intensity, Some(-5.0));
        assert_eq!(events[26].initial_distance, 25.0);
        assert_eq!(events[26].cruise_speed, Some(120.0));
        assert_eq!(events[26].braking_intensity, Some(-8.0));
    }

    #[test]
    fn lc_blocks_follow_lateral_category() {
        let events = enumerate_events();
        let lc: Vec<&EventSpec> = events.iter().filter(|e| e.family() == Family::Lc).collect();
        assert!(lc[..6].iter().all(|e| e.scenario == Scenario::LcNormalSlow));
        assert!(lc[6..12].iter().all(|e| e.scenario == Scenario::LcNormalFast));
        assert!(lc[12..18].iter().all(|e| e.scenario == Scenario::LcFragmented));
        assert!(lc[18..].iter().all(|e| e.scenario == Scenario::LcAborted));
        assert_eq!(lc[0].initial_distance, 5.0);
        assert_eq!(lc[1].initial_distance, 15.0);
    }

    #[test]
    fn overlapping_anchors_rejected() {
        let mut e = enumerate_events()[0].clone();
        e.anchors.brake_onset = e.anchors.merge_onset;
        assert!(e.validate().is_err());
        let mut e = enumerate_events()[0].clone();
        e.anchors.merge_onset = Some(31.0);
        assert!(e.validate().is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::parse(s.name()).unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
        assert!(Scenario::parse("XX").is_err());
    }
}
