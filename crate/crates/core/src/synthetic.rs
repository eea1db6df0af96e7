//! Synthetic clip ratings from a planted risk function, for running the
//! pipeline without the human-rating dataset.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruction::RatingRecord;
use crate::scenario::{EventTrajectory, Family, Frame};

/// Planted per-frame risk on the 0..10 scale: grows with proximity, closing
/// speed and neighbour braking, damped by lateral separation.
pub fn planted_risk(frame: &Frame) -> f64 {
    let s = &frame.subject;
    let mut worst = 0.0_f64;
    for n in &frame.neighbours {
        let dx = n.x - s.x;
        let gap = (dx.abs() - 0.5 * (n.length + s.length)).max(0.0);
        let lat = ((n.y - s.y).abs() - 0.5 * (n.width + s.width)).max(0.0);
        let overlap = (-lat * lat).exp();
        let closing = if dx >= 0.0 { s.vx - n.vx } else { n.vx - s.vx }.clamp(0.0, 10.0);
        let braking = if dx >= 0.0 { (-n.ax).clamp(0.0, 8.0) } else { 0.0 };
        let threat = overlap * (5.0 * (-gap / 15.0).exp() + 0.6 * closing / (1.0 + gap / 10.0) + 0.25 * braking);
        worst = worst.max(threat);
    }
    10.0 * (1.0 - (-worst / 4.0).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub participants: u32,
    /// Per-rating noise sd.
    pub noise_sd: f64,
    /// Sd of each participant's persistent offset.
    pub bias_sd: f64,
    /// Share of participants who rate uniformly at random.
    pub inattentive_fraction: f64,
    /// Events each participant rates per family, drawn at random; `None`
    /// means every event.
    pub events_per_family: Option<usize>,
    pub clip_seconds: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            participants: 2164,
            noise_sd: 0.5,
            bias_sd: 0.5,
            inattentive_fraction: 0.05,
            events_per_family: Some(4),
            clip_seconds: 6.0,
            seed: 0,
        }
    }
}

/// Peak planted risk per clip.
pub fn clip_peaks(traj: &EventTrajectory, clips: usize, clip_seconds: f64) -> Vec<f64> {
    let mut peaks = vec![0.0_f64; clips];
    for f in &traj.frames {
        let r = planted_risk(f);
        // frames on a boundary belong to both clips
        let pos = f.t / clip_seconds;
        let lo = (pos.ceil() as usize).saturating_sub(1);
        let hi = pos.floor() as usize;
        for peak in &mut peaks[lo.min(clips - 1)..=hi.min(clips - 1)] {
            *peak = peak.max(r);
        }
    }
    peaks
}

/// Every participant rates every clip of each event assigned to them.
pub fn synthetic_ratings(trajs: &[EventTrajectory], cfg: &SyntheticConfig) -> Result<Vec<RatingRecord>> {
    if cfg.participants == 0 || !(cfg.noise_sd >= 0.0) || !(cfg.bias_sd >= 0.0) {
        return Err(Error::InvalidConfig("synthetic participants must be >= 1 and sds >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let bias = Normal::new(0.0, cfg.bias_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let raters: Vec<(f64, bool)> = (0..cfg.participants)
        .map(|_| (bias.sample(&mut rng), rng.random::<f64>() < cfg.inattentive_fraction))
        .collect();
    let peaks: Vec<Vec<f64>> = trajs
        .iter()
        .map(|t| clip_peaks(t, t.scenario.family().clip_count(), cfg.clip_seconds))
        .collect();
    let mut by_family: BTreeMap<Family, Vec<usize>> = BTreeMap::new();
    for (i, t) in trajs.iter().enumerate() {
        by_family.entry(t.scenario.family()).or_default().push(i);
    }
    let mut out = Vec::new();
    for (p, &(offset, inattentive)) in raters.iter().enumerate() {
        let mut assigned: Vec<usize> = match cfg.events_per_family {
            None => (0..trajs.len()).collect(),
            Some(k) => by_family
                .values()
                .flat_map(|idx| idx.choose_multiple(&mut rng, k).copied().collect::<Vec<_>>())
                .collect(),
        };
        assigned.sort_unstable();
        for i in assigned {
            let traj = &trajs[i];
            for (c, peak) in peaks[i].iter().enumerate() {
                let rating = if inattentive {
                    rng.random_range(0..=10u8)
                } else {
                    (peak + offset + noise.sample(&mut rng)).round().clamp(0.0, 10.0) as u8
                };
                out.push(RatingRecord {
                    participant_id: p as u32 + 1,
                    event_id: traj.event_id,
                    clip_index: c as u32 + 1,
                    rating,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{enumerate_events, simulate_event};
    use std::collections::BTreeSet;

    #[test]
    fn planted_risk_is_bounded_and_varies() {
        let trajs: Vec<_> = enumerate_events().iter().map(|e| simulate_event(e).unwrap()).collect();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for t in &trajs {
            for f in &t.frames {
                let r = planted_risk(f);
                assert!((0.0..=10.0).contains(&r));
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        assert!(hi - lo > 5.0, "{lo}..{hi}");
    }

    #[test]
    fn ratings_are_complete_and_seeded() {
        let trajs: Vec<_> = enumerate_events()[..3].iter().map(|e| simulate_event(e).unwrap()).collect();
        let cfg = SyntheticConfig {
            participants: 4,
            events_per_family: None,
            ..SyntheticConfig::default()
        };
        let r = synthetic_ratings(&trajs, &cfg).unwrap();
        assert_eq!(r.len(), 3 * 4 * 5);
        assert!(r.iter().all(|x| x.rating <= 10 && (1..=5).contains(&x.clip_index)));
        assert_eq!(r, synthetic_ratings(&trajs, &cfg).unwrap());
    }

    #[test]
    fn participants_rate_a_subset_per_family() {
        let trajs: Vec<_> = enumerate_events().iter().map(|e| simulate_event(e).unwrap()).collect();
        let cfg = SyntheticConfig {
            participants: 10,
            ..SyntheticConfig::default()
        };
        let r = synthetic_ratings(&trajs, &cfg).unwrap();
        for p in 1..=10 {
            let events: BTreeSet<u32> = r.iter().filter(|x| x.participant_id == p).map(|x| x.event_id).collect();
            assert_eq!(events.len(), 16);
            for fam in Family::ALL {
                let lo = fam.first_event_id();
                assert_eq!(events.iter().filter(|e| (lo..lo + fam.event_count()).contains(e)).count(), 4);
            }
        }
    }

    #[test]
    fn noiseless_ratings_follow_peaks() {
        let trajs = vec![simulate_event(&enumerate_events()[30]).unwrap()];
        let cfg = SyntheticConfig {
            participants: 2,
            noise_sd: 0.0,
            bias_sd: 0.0,
            inattentive_fraction: 0.0,
            events_per_family: None,
            ..SyntheticConfig::default()
        };
        let r = synthetic_ratings(&trajs, &cfg).unwrap();
        let peaks = clip_peaks(&trajs[0], 5, 6.0);
        for x in &r {
            assert_eq!(x.rating as f64, peaks[x.clip_index as usize - 1].round());
        }
    }
}
