//! Continuous risk curves from discrete clip ratings: rater filtering,
//! rating-moment alignment, interpolation and cross-participant aggregation.

mod crossval;
mod interp;

pub use crossval::{
    crossval_interp, median_crossval_rmse, stimulus_decay_curve, stimulus_decay_family, CROSSVAL_KNOTS, CROSSVAL_SAMPLES,
};
pub use interp::{interp_linear, interp_pchip, interp_quadratic_monotone, poles, Interpolant, Method};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::DT;

/// One discrete 0..10 rating of one clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RatingRecord {
    pub participant_id: u32,
    pub event_id: u32,
    pub clip_index: u32,
    pub rating: u8,
}

/// Uniform 10 Hz series starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl RiskCurve {
    pub fn new(values: Vec<f64>) -> Self {
        Self { dt: DT, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| ((k as f64 * self.dt) * 1e9).round() / 1e9)
    }
}

/// Delays behind the shipped rating-moment tables, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentParams {
    pub merge_peak_delay: f64,
    pub brake_peak_delay: f64,
    pub decay_time: f64,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        Self {
            merge_peak_delay: 2.95,
            brake_peak_delay: 1.15,
            decay_time: 3.93,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub slot: usize,
    pub time: f64,
    /// Second moment of a rating placed twice.
    pub duplicate: bool,
}

/// Rating moments per event id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlignmentTable {
    pub events: BTreeMap<u32, Vec<Moment>>,
}

const BUILTIN: [&str; 4] = [
    include_str!("../../data/alignment_mb.csv"),
    include_str!("../../data/alignment_hb.csv"),
    include_str!("../../data/alignment_lc.csv"),
    include_str!("../../data/alignment_svm.csv"),
];

impl AlignmentTable {
    /// The packaged tables for all 105 catalog events.
    pub fn builtin() -> Self {
        let mut table = AlignmentTable::default();
        for text in BUILTIN {
            table.merge_csv(text).expect("packaged alignment tables are valid");
        }
        table
    }

    /// Parses `event_id,slot,time_s,duplicate_flag` rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut table = AlignmentTable::default();
        table.merge_csv(text)?;
        Ok(table)
    }

    fn merge_csv(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::InvalidConfig(format!("alignment table line {}: `{line}`", lineno + 1));
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 4 {
                return Err(bad());
            }
            let event: u32 = cells[0].parse().map_err(|_| bad())?;
            let slot: usize = cells[1].parse().map_err(|_| bad())?;
            let time: f64 = cells[2].parse().map_err(|_| bad())?;
            let duplicate = match cells[3] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            self.events.entry(event).or_default().push(Moment { slot, time, duplicate });
        }
        for (event, moments) in &self.events {
            if moments.windows(2).any(|w| w[1].time < w[0].time || w[1].slot < w[0].slot) {
                return Err(Error::InvalidConfig(format!("event {event}: moments out of order")));
            }
            if moments.first().is_none_or(|m| m.time != 0.0) {
                return Err(Error::InvalidConfig(format!("event {event}: first moment must be 0")));
            }
        }
        Ok(())
    }

    pub fn moments(&self, event_id: u32) -> Result<&[Moment]> {
        self.events
            .get(&event_id)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownEvent(event_id))
    }

    /// Number of distinct rating slots (clips) of an event.
    pub fn clip_count(&self, event_id: u32) -> Result<usize> {
        Ok(self.moments(event_id)?.iter().map(|m| m.slot).collect::<BTreeSet<_>>().len())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("event_id,slot,time_s,duplicate_flag\n");
        for (event, moments) in &self.events {
            for m in moments {
                out.push_str(&format!("{event},{},{:.2},{}\n", m.slot, m.time, u8::from(m.duplicate)));
            }
        }
        out
    }
}

/// Places each clip rating (clip order) at its table moment(s).
pub fn align_ratings(event_id: u32, ratings: &[f64], table: &AlignmentTable) -> Result<Vec<(f64, f64)>> {
    let moments = table.moments(event_id)?;
    let clips = table.clip_count(event_id)?;
    if ratings.len() != clips {
        return Err(Error::ClipCountMismatch {
            event: event_id,
            expected: clips,
            got: ratings.len(),
        });
    }
    Ok(moments.iter().map(|m| (m.time, ratings[m.slot - 1])).collect())
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Raters whose clip sequence correlates with the group mean below this are dropped.
pub const MIN_CORRELATION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// One pass against the mean of all raters.
    SinglePass,
    /// Repeat against the mean of the survivors until nobody else is dropped.
    #[default]
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterOutcome {
    pub retained: Vec<RatingRecord>,
    pub dropped_participants: Vec<u32>,
    /// Fewer than two raters: nothing was filtered.
    pub single_participant: bool,
}

/// Correlation filter over all ratings of one event.
pub fn filter_ratings(records: &[RatingRecord], mode: FilterMode) -> Result<FilterOutcome> {
    if let Some(r) = records.iter().find(|r| r.event_id != records[0].event_id) {
        return Err(Error::InvalidRatings(format!(
            "filter_ratings expects one event, got {} and {}",
            records[0].event_id, r.event_id
        )));
    }
    let mut seqs: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
    for r in records {
        seqs.entry(r.participant_id).or_default().insert(r.clip_index, r.rating as f64);
    }
    if seqs.len() < 2 {
        return Ok(FilterOutcome {
            retained: records.to_vec(),
            dropped_participants: Vec::new(),
            single_participant: true,
        });
    }
    let mut alive: BTreeSet<u32> = seqs.keys().copied().collect();
    loop {
        let mut sum: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
        for p in &alive {
            for (&c, &v) in &seqs[p] {
                let e = sum.entry(c).or_default();
                e.0 += v;
                e.1 += 1;
            }
        }
        let mean: BTreeMap<u32, f64> = sum.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect();
        let drop: Vec<u32> = alive
            .iter()
            .copied()
            .filter(|p| {
                let (a, b): (Vec<f64>, Vec<f64>) = seqs[p].iter().map(|(c, v)| (*v, mean[c])).unzip();
                pearson(&a, &b) < MIN_CORRELATION
            })
            .collect();
        if drop.is_empty() {
            break;
        }
        for p in &drop {
            alive.remove(p);
        }
        if mode == FilterMode::SinglePass || alive.len() < 2 {
            break;
        }
    }
    let dropped_participants = seqs.keys().copied().filter(|p| !alive.contains(p)).collect();
    Ok(FilterOutcome {
        retained: records.iter().copied().filter(|r| alive.contains(&r.participant_id)).collect(),
        dropped_participants,
        single_participant: false,
    })
}

/// Applies [`filter_ratings`] event by event.
pub fn filter_all(records: &[RatingRecord], mode: FilterMode) -> Result<(Vec<RatingRecord>, BTreeMap<u32, FilterOutcome>)> {
    let mut by_event: BTreeMap<u32, Vec<RatingRecord>> = BTreeMap::new();
    for r in records {
        by_event.entry(r.event_id).or_default().push(*r);
    }
    let mut kept = Vec::with_capacity(records.len());
    let mut outcomes = BTreeMap::new();
    for (event, recs) in by_event {
        let out = filter_ratings(&recs, mode)?;
        kept.extend_from_slice(&out.retained);
        outcomes.insert(event, out);
    }
    Ok((kept, outcomes))
}

/// Pointwise statistics of several curves on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub mean: Vec<f64>,
    pub p25: Vec<f64>,
    pub p75: Vec<f64>,
    pub std: Vec<f64>,
}

/// Nearest-rank percentile of an ascending slice.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn aggregate_curves(curves: &[RiskCurve]) -> Result<AggregateCurve> {
    let first = curves.first().ok_or_else(|| Error::InvalidRatings("no curves to aggregate".into()))?;
    if curves.iter().any(|c| c.len() != first.len() || (c.dt - first.dt).abs() > 1e-12) {
        return Err(Error::GridMismatch);
    }
    let n = curves.len() as f64;
    let mut agg = AggregateCurve {
        mean: Vec::with_capacity(first.len()),
        p25: Vec::with_capacity(first.len()),
        p75: Vec::with_capacity(first.len()),
        std: Vec::with_capacity(first.len()),
    };
    let mut col = Vec::with_capacity(curves.len());
    for k in 0..first.len() {
        col.clear();
        col.extend(curves.iter().map(|c| c.values[k]));
        col.sort_by(f64::total_cmp);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        agg.mean.push(mean);
        agg.p25.push(nearest_rank(&col, 25.0));
        agg.p75.push(nearest_rank(&col, 75.0));
        agg.std.push(var.sqrt());
    }
    Ok(agg)
}

/// Reconstructed curves of one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCurves {
    pub event_id: u32,
    pub participants: Vec<u32>,
    pub aggregate: AggregateCurve,
}

/// Aligns, interpolates and aggregates the (already filtered) ratings of
/// every event present in `records`.
pub fn reconstruct(
    records: &[RatingRecord],
    table: &AlignmentTable,
    method: Method,
    duration_of: impl Fn(u32) -> Result<f64>,
) -> Result<Vec<EventCurves>> {
    let mut by_event: BTreeMap<u32, BTreeMap<u32, Vec<(u32, f64)>>> = BTreeMap::new();
    for r in records {
        by_event
            .entry(r.event_id)
            .or_default()
            .entry(r.participant_id)
            .or_default()
            .push((r.clip_index, r.rating as f64));
    }
    let mut out = Vec::with_capacity(by_event.len());
    for (event, per_participant) in by_event {
        let duration = duration_of(event)?;
        let clips = table.clip_count(event)?;
        let mut curves = Vec::new();
        let mut participants = Vec::new();
        for (p, mut seq) in per_participant {
            seq.sort_by_key(|s| s.0);
            let ratings: Vec<f64> = seq.iter().map(|s| s.1).collect();
            if seq.iter().map(|s| s.0).ne(1..=clips as u32) {
                return Err(Error::ClipCountMismatch {
                    event,
                    expected: clips,
                    got: ratings.len(),
                });
            }
            let anchors = align_ratings(event, &ratings, table)?;
            curves.push(Interpolant::new(method, &anchors)?.sample(duration));
            participants.push(p);
        }
        out.push(EventCurves {
            event_id: event,
            participants,
            aggregate: aggregate_curves(&curves)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{enumerate_events, Family};

    fn rec(p: u32, e: u32, ratings: &[u8]) -> Vec<RatingRecord> {
        ratings
            .iter()
            .enumerate()
            .map(|(i, &r)| RatingRecord {
                participant_id: p,
                event_id: e,
                clip_index: i as u32 + 1,
                rating: r,
            })
            .collect()
    }

    #[test]
    fn builtin_table_covers_catalog() {
        let t = AlignmentTable::builtin();
        assert_eq!(t.events.len(), 105);
        for e in enumerate_events() {
            let m = t.moments(e.event_id).unwrap();
            assert_eq!(m[0].time, 0.0);
            assert_eq!(m.last().unwrap().time, e.duration);
            assert_eq!(t.clip_count(e.event_id).unwrap(), e.family().clip_count());
            assert!(m.windows(2).all(|w| w[1].time >= w[0].time));
            let expect = match (e.family(), e.family_index()) {
                (Family::Lc, i) if i >= 19 => 9,
                _ => 8,
            };
            assert_eq!(m.len(), expect, "event {}", e.event_id);
        }
    }

    #[test]
    fn table_round_trips_through_csv() {
        let t = AlignmentTable::builtin();
        assert_eq!(AlignmentTable::from_csv(&t.to_csv()).unwrap(), t);
        assert!(AlignmentTable::from_csv("h\n1,1,0.0,x\n").is_err());
        assert!(AlignmentTable::from_csv("h\n1,1,2.0,0\n1,2,1.0,0\n").is_err());
    }

    #[test]
    fn alignment_examples() {
        let t = AlignmentTable::builtin();
        let a = align_ratings(1, &[1.0, 2.0, 3.0, 4.0, 5.0], &t).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a[2], (11.0, 2.0));
        assert_eq!(a[3], (13.9, 2.0));
        let hb = align_ratings(28, &[6.0, 2.0, 3.0, 4.0, 5.0], &t).unwrap();
        assert_eq!(&hb[..2], &[(0.0, 6.0), (5.9, 6.0)]);
        assert!(matches!(align_ratings(200, &[1.0; 5], &t), Err(Error::UnknownEvent(200))));
        assert!(matches!(
            align_ratings(1, &[1.0; 6], &t),
            Err(Error::ClipCountMismatch { expected: 5, got: 6, .. })
        ));
        let lc = align_ratings(73, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &t).unwrap();
        assert_eq!(lc.len(), 9);
        assert_eq!(lc[5], (26.68, 5.0));
        assert_eq!(lc[6], (29.30, 5.0));
    }

    #[test]
    fn filter_examples() {
        let mut r = rec(1, 1, &[1, 3, 6, 4, 2]);
        r.extend(rec(2, 1, &[2, 4, 7, 5, 3]));
        r.extend(rec(3, 1, &[1, 3, 6, 4, 2]));
        // anti-correlated
        r.extend(rec(4, 1, &[7, 5, 1, 3, 6]));
        // constant
        r.extend(rec(5, 1, &[5, 5, 5, 5, 5]));
        let out = filter_ratings(&r, FilterMode::FixedPoint).unwrap();
        assert_eq!(out.dropped_participants, vec![4, 5]);
        assert_eq!(out.retained.len(), 15);
        let again = filter_ratings(&out.retained, FilterMode::FixedPoint).unwrap();
        assert!(again.dropped_participants.is_empty());
        let single = filter_ratings(&rec(9, 1, &[5, 5, 5, 5, 5]), FilterMode::FixedPoint).unwrap();
        assert!(single.single_participant);
        assert_eq!(single.retained.len(), 5);
    }

    #[test]
    fn identical_to_mean_is_kept() {
        let mut r = rec(1, 2, &[1, 4, 8, 3, 2]);
        r.extend(rec(2, 2, &[1, 4, 8, 3, 2]));
        let out = filter_ratings(&r, FilterMode::SinglePass).unwrap();
        assert!(out.dropped_participants.is_empty());
        let mut mixed = r.clone();
        mixed.extend(rec(3, 3, &[1, 1, 1, 1, 1]));
        assert!(filter_ratings(&mixed, FilterMode::SinglePass).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let one = RiskCurve::new(vec![1.0, 2.0, 3.0]);
        let a = aggregate_curves(std::slice::from_ref(&one)).unwrap();
        assert_eq!(a.mean, one.values);
        assert_eq!(a.p25, a.p75);
        let two = [RiskCurve::new(vec![2.0; 4]), RiskCurve::new(vec![4.0; 4])];
        let b = aggregate_curves(&two).unwrap();
        assert_eq!(b.mean, vec![3.0; 4]);
        assert_eq!(b.std, vec![1.0; 4]);
        assert!(matches!(
            aggregate_curves(&[RiskCurve::new(vec![0.0; 3]), RiskCurve::new(vec![0.0; 4])]),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn nearest_rank_oracle() {
        // Hand-worked: n = 4, p25 -> rank 1, p75 -> rank 3.
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&s, 25.0), 1.0);
        assert_eq!(nearest_rank(&s, 75.0), 3.0);
        // n = 5, p25 -> rank ceil(1.25) = 2, p75 -> rank ceil(3.75) = 4.
        let s = [10.0, 20.0, 30.0, 40.0, 50.0];
        assert_eq!(nearest_rank(&s, 25.0), 20.0);
        assert_eq!(nearest_rank(&s, 75.0), 40.0);
        let curves: Vec<RiskCurve> = [3.0, 1.0, 5.0, 2.0, 4.0].iter().map(|v| RiskCurve::new(vec![*v])).collect();
        let a = aggregate_curves(&curves).unwrap();
        assert_eq!((a.p25[0], a.p75[0]), (2.0, 4.0));
        let mut rev = curves.clone();
        rev.reverse();
        assert_eq!(aggregate_curves(&rev).unwrap(), a);
    }

    #[test]
    fn reconstruct_end_to_end() {
        let t = AlignmentTable::builtin();
        let mut r = rec(1, 1, &[1, 3, 6, 4, 2]);
        r.extend(rec(2, 1, &[1, 5, 6, 4, 2]));
        r.extend(rec(1, 55, &[0, 1, 2, 6, 3, 1]));
        let out = reconstruct(&r, &t, Method::Pchip, |e| {
            Ok(if e >= 55 && e <= 78 { 36.0 } else { 30.0 })
        })
        .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].aggregate.mean.len(), 301);
        assert_eq!(out[1].aggregate.mean.len(), 361);
        assert_eq!(out[0].aggregate.mean[110], 4.0);
        assert_eq!(out[0].participants, vec![1, 2]);
    }
}
