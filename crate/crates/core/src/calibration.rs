//! Error metrics, joint rescaling, random-search calibration of the analytic
//! models and the cross-model error comparison.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{drf_risk, pcad_risk, DrfParams, ModelKind, PcadParams};
use crate::scenario::{EventTrajectory, Family};

pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64> {
    if pred.len() != obs.len() {
        return Err(Error::LengthMismatch(pred.len(), obs.len()));
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig("rmse of an empty series".into()));
    }
    let sse: f64 = pred.iter().zip(obs).map(|(p, o)| (p - o) * (p - o)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Min and max over every value of every series.
pub fn joint_range(series: &[Vec<f64>]) -> Result<(f64, f64)> {
    let (lo, hi) = series
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateRange(lo));
    }
    Ok((lo, hi))
}

/// Maps the whole collection onto `[0, 10]` with one shared affine map.
pub fn minmax_rescale(series: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = joint_range(series)?;
    let k = 10.0 / (hi - lo);
    Ok(series.iter().map(|s| s.iter().map(|v| (v - lo) * k).collect()).collect())
}

/// Frame counts per family over a set of trajectories.
pub fn sample_counts(trajs: &[EventTrajectory]) -> BTreeMap<Family, usize> {
    let mut out = BTreeMap::new();
    for t in trajs {
        *out.entry(t.scenario.family()).or_insert(0) += t.frames.len();
    }
    out
}

/// Expected catalog frame count of a family.
pub fn expected_sample_count(family: Family) -> usize {
    family.event_count() as usize * crate::scenario::sample_count(family.duration())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBound {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    /// Draw uniformly in log space.
    pub log: bool,
}

impl ParamBound {
    fn new(name: &str, lo: f64, hi: f64, log: bool) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
            log,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.log {
            (self.lo.ln() + rng.random::<f64>() * (self.hi.ln() - self.lo.ln())).exp()
        } else {
            self.lo + rng.random::<f64>() * (self.hi - self.lo)
        }
    }
}

pub fn default_bounds(model: ModelKind) -> Vec<ParamBound> {
    match model {
        ModelKind::Pcad => vec![
            ParamBound::new("sigma_n_x", 0.05, 3.0, true),
            ParamBound::new("sigma_n_y", 0.05, 3.0, true),
            ParamBound::new("sigma_s_x", 0.05, 3.0, true),
            ParamBound::new("sigma_s_y", 0.05, 3.0, true),
            ParamBound::new("t_s_a", 0.0, 2.0, false),
            ParamBound::new("t_n_a", 0.0, 2.0, false),
            ParamBound::new("alpha", 0.5, 4.0, false),
        ],
        ModelKind::Drf => vec![
            ParamBound::new("s_steepness", 0.001, 0.05, true),
            ParamBound::new("t_la", 0.5, 5.0, false),
            ParamBound::new("m_widening", 0.0, 0.2, false),
            ParamBound::new("c_width", 0.1, 2.0, true),
            ParamBound::new("C_sev", 0.1, 10.0, true),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum ModelParams {
    #[serde(rename = "PCAD")]
    Pcad(PcadParams),
    #[serde(rename = "DRF")]
    Drf(DrfParams),
}

impl ModelParams {
    pub fn default_for(model: ModelKind) -> Self {
        match model {
            ModelKind::Pcad => ModelParams::Pcad(PcadParams::default()),
            ModelKind::Drf => ModelParams::Drf(DrfParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Pcad(_) => ModelKind::Pcad,
            ModelParams::Drf(_) => ModelKind::Drf,
        }
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        let v = match (self, name) {
            (ModelParams::Pcad(p), "sigma_n_x") => p.sigma_n_x,
            (ModelParams::Pcad(p), "sigma_n_y") => p.sigma_n_y,
            (ModelParams::Pcad(p), "sigma_s_x") => p.sigma_s_x,
            (ModelParams::Pcad(p), "sigma_s_y") => p.sigma_s_y,
            (ModelParams::Pcad(p), "t_s_a") => p.t_s_a,
            (ModelParams::Pcad(p), "t_n_a") => p.t_n_a,
            (ModelParams::Pcad(p), "alpha") => p.alpha,
            (ModelParams::Drf(p), "s_steepness") => p.s_steepness,
            (ModelParams::Drf(p), "t_la") => p.t_la,
            (ModelParams::Drf(p), "m_widening") => p.m_widening,
            (ModelParams::Drf(p), "c_width") => p.c_width,
            (ModelParams::Drf(p), "C_sev") => p.c_sev,
            _ => return Err(Error::InvalidConfig(format!("unknown {} parameter `{name}`", self.kind().name()))),
        };
        Ok(v)
    }

    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        let kind = self.kind();
        let slot = match (self, name) {
            (ModelParams::Pcad(p), "sigma_n_x") => &mut p.sigma_n_x,
            (ModelParams::Pcad(p), "sigma_n_y") => &mut p.sigma_n_y,
            (ModelParams::Pcad(p), "sigma_s_x") => &mut p.sigma_s_x,
            (ModelParams::Pcad(p), "sigma_s_y") => &mut p.sigma_s_y,
            (ModelParams::Pcad(p), "t_s_a") => &mut p.t_s_a,
            (ModelParams::Pcad(p), "t_n_a") => &mut p.t_n_a,
            (ModelParams::Pcad(p), "alpha") => &mut p.alpha,
            (ModelParams::Drf(p), "s_steepness") => &mut p.s_steepness,
            (ModelParams::Drf(p), "t_la") => &mut p.t_la,
            (ModelParams::Drf(p), "m_widening") => &mut p.m_widening,
            (ModelParams::Drf(p), "c_width") => &mut p.c_width,
            (ModelParams::Drf(p), "C_sev") => &mut p.c_sev,
            _ => return Err(Error::InvalidConfig(format!("unknown {} parameter `{name}`", kind.name()))),
        };
        *slot = v;
        Ok(())
    }

    /// Raw (unscaled) output per frame of each trajectory.
    pub fn raw_outputs(&self, trajs: &[EventTrajectory]) -> Result<Vec<Vec<f64>>> {
        trajs
            .iter()
            .map(|t| {
                t.frames
                    .iter()
                    .map(|f| match self {
                        ModelParams::Pcad(p) => pcad_risk(f, p),
                        ModelParams::Drf(p) => Ok(drf_risk(f, p)),
                    })
                    .collect()
            })
            .collect()
    }

    /// Outputs rescaled jointly over `trajs` onto `[0, 10]`.
    pub fn rescaled_outputs(&self, trajs: &[EventTrajectory]) -> Result<Vec<Vec<f64>>> {
        minmax_rescale(&self.raw_outputs(trajs)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationJob {
    pub model: ModelKind,
    pub bounds: Vec<ParamBound>,
    pub draws: usize,
    pub seed: u64,
}

impl CalibrationJob {
    pub fn new(model: ModelKind, draws: usize, seed: u64) -> Self {
        Self {
            model,
            bounds: default_bounds(model),
            draws,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::NoDraws);
        }
        for b in &self.bounds {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) || (b.log && b.lo <= 0.0) {
                return Err(Error::InvalidConfig(format!("bad bounds for `{}`", b.name)));
            }
            ModelParams::default_for(self.model).get(&b.name)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub draw: usize,
    pub values: Vec<f64>,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub best: ModelParams,
    pub best_draw: usize,
    pub best_rmse: f64,
    pub default_rmse: f64,
    pub param_names: Vec<String>,
    pub trace: Vec<TraceRow>,
}

/// RMSE of jointly rescaled outputs against the concatenated targets, or
/// infinity when the outputs are constant.
pub fn score(params: &ModelParams, trajs: &[EventTrajectory], targets: &[Vec<f64>]) -> Result<f64> {
    let raw = params.raw_outputs(trajs)?;
    let scaled = match minmax_rescale(&raw) {
        Ok(s) => s,
        Err(Error::DegenerateRange(_)) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let pred: Vec<f64> = scaled.into_iter().flatten().collect();
    let obs: Vec<f64> = targets.iter().flatten().copied().collect();
    rmse(&pred, &obs)
}

/// Random search. Draw 0 is the default record; the rest are sampled within
/// the bounds. Ties go to the lowest draw index.
pub fn calibrate(job: &CalibrationJob, trajs: &[EventTrajectory], targets: &[Vec<f64>]) -> Result<CalibrationResult> {
    job.validate()?;
    if trajs.len() != targets.len() {
        return Err(Error::LengthMismatch(trajs.len(), targets.len()));
    }
    if trajs.iter().zip(targets).any(|(t, y)| t.frames.len() != y.len()) {
        return Err(Error::GridMismatch);
    }
    let counts = sample_counts(trajs);
    for (fam, n) in &counts {
        let full = trajs.iter().filter(|t| t.scenario.family() == *fam).count() == fam.event_count() as usize;
        if full && *n != expected_sample_count(*fam) {
            return Err(Error::InvalidConfig(format!(
                "{fam} has {n} samples, expected {}",
                expected_sample_count(*fam)
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let default = ModelParams::default_for(job.model);
    let mut candidates = Vec::with_capacity(job.draws);
    candidates.push(default);
    for _ in 1..job.draws {
        let mut p = default;
        for b in &job.bounds {
            p.set(&b.name, b.draw(&mut rng))?;
        }
        candidates.push(p);
    }
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|p| score(p, trajs, targets))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    if !scores[best].is_finite() {
        return Err(Error::DegenerateRange(0.0));
    }
    let trace = candidates
        .iter()
        .zip(&scores)
        .enumerate()
        .map(|(draw, (p, s))| {
            Ok(TraceRow {
                draw,
                values: job.bounds.iter().map(|b| p.get(&b.name)).collect::<Result<_>>()?,
                rmse: *s,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CalibrationResult {
        best: candidates[best],
        best_draw: best,
        best_rmse: scores[best],
        default_rmse: scores[0],
        param_names: job.bounds.iter().map(|b| b.name.clone()).collect(),
        trace,
    })
}

/// One event's truth curve and the per-model predictions on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEvent {
    pub event_id: u32,
    pub scenario: String,
    pub truth: Vec<f64>,
    pub models: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub scenario: String,
    pub model: String,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub model: String,
    pub bin_lo: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventErrors {
    pub event_id: u32,
    pub model: String,
    pub abs_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Per-frame absolute errors, in input event order.
    pub errors: Vec<EventErrors>,
    /// Per scenario and model, plus an `ALL` row per model.
    pub summaries: Vec<ErrorSummary>,
    pub histograms: Vec<HistogramBin>,
}

impl ComparisonReport {
    pub fn event_errors(&self, event_id: u32, model: &str) -> Option<&[f64]> {
        self.errors
            .iter()
            .find(|e| e.event_id == event_id && e.model == model)
            .map(|e| e.abs_error.as_slice())
    }

    pub fn summary(&self, scenario: &str, model: &str) -> Option<&ErrorSummary> {
        self.summaries.iter().find(|s| s.scenario == scenario && s.model == model)
    }
}

pub const HISTOGRAM_BIN: f64 = 0.25;

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn summarize(scenario: &str, model: &str, mut v: Vec<f64>) -> ErrorSummary {
    v.sort_by(f64::total_cmp);
    ErrorSummary {
        scenario: scenario.to_string(),
        model: model.to_string(),
        n: v.len(),
        median: quantile_sorted(&v, 0.5),
        q1: quantile_sorted(&v, 0.25),
        q3: quantile_sorted(&v, 0.75),
    }
}

pub fn compare_models(events: &[ComparisonEvent]) -> Result<ComparisonReport> {
    let mut errors = Vec::new();
    let mut pooled: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for ev in events {
        for (model, pred) in &ev.models {
            if pred.len() != ev.truth.len() {
                return Err(Error::GridMismatch);
            }
            let e: Vec<f64> = pred.iter().zip(&ev.truth).map(|(p, t)| (p - t).abs()).collect();
            pooled.entry((ev.scenario.clone(), model.clone())).or_default().extend(&e);
            pooled.entry(("ALL".into(), model.clone())).or_default().extend(&e);
            errors.push(EventErrors {
                event_id: ev.event_id,
                model: model.clone(),
                abs_error: e,
            });
        }
    }
    let mut summaries = Vec::new();
    let mut histograms = Vec::new();
    for ((scenario, model), v) in pooled {
        if scenario == "ALL" {
            let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
            for e in &v {
                *bins.entry((e / HISTOGRAM_BIN).floor() as usize).or_insert(0) += 1;
            }
            histograms.extend(bins.into_iter().map(|(b, count)| HistogramBin {
                model: model.clone(),
                bin_lo: b as f64 * HISTOGRAM_BIN,
                count,
            }));
        }
        summaries.push(summarize(&scenario, &model, v));
    }
    Ok(ComparisonReport {
        errors,
        summaries,
        histograms,
    })
}
