//! End-to-end run on synthetic ratings: ratings, filtering, reconstruction,
//! per-group networks, calibrated analytic models and the error comparison.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, compare_models, CalibrationJob, CalibrationResult, ComparisonEvent, ComparisonReport};
use crate::error::Result;
use crate::features::FeatureManifest;
use crate::models::ModelKind;
use crate::pipeline::{group_data, simulate_catalog, train_group, TrainedSurrogate};
use crate::reconstruction::{filter_all, reconstruct, AlignmentTable, FilterMode, Method};
use crate::scenario::{EventTrajectory, ModelGroup};
use crate::surrogate::MlpConfig;
use crate::synthetic::{synthetic_ratings, SyntheticConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RehearsalConfig {
    pub seed: u64,
    pub synthetic: SyntheticConfig,
    pub mlp: MlpConfig,
    pub calibration_draws: usize,
    pub method: Method,
}

impl Default for RehearsalConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            synthetic: SyntheticConfig::default(),
            mlp: MlpConfig::default(),
            calibration_draws: 300,
            method: Method::Pchip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub group: ModelGroup,
    pub rows: usize,
    pub dim: usize,
    pub final_train_rmse: f64,
    pub final_val_rmse: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RehearsalResult {
    pub ratings: usize,
    pub retained: usize,
    pub dropped_participant_events: usize,
    pub groups: Vec<GroupOutcome>,
    pub pcad: CalibrationResult,
    pub drf: CalibrationResult,
    /// All frames.
    pub comparison: ComparisonReport,
    /// Frames held out from network training only.
    pub heldout: ComparisonReport,
    #[serde(skip)]
    pub networks: Vec<TrainedSurrogate>,
}

pub fn run_rehearsal(cfg: &RehearsalConfig) -> Result<RehearsalResult> {
    let trajs = simulate_catalog()?;
    let ratings = synthetic_ratings(
        &trajs,
        &SyntheticConfig {
            seed: cfg.seed,
            ..cfg.synthetic.clone()
        },
    )?;
    let (retained, outcomes) = filter_all(&ratings, FilterMode::default())?;
    let table = AlignmentTable::builtin();
    let by_id: BTreeMap<u32, &EventTrajectory> = trajs.iter().map(|t| (t.event_id, t)).collect();
    let curves = reconstruct(&retained, &table, cfg.method, |id| {
        by_id
            .get(&id)
            .map(|t| t.duration())
            .ok_or(crate::error::Error::UnknownEvent(id))
    })?;
    let targets: BTreeMap<u32, Vec<f64>> = curves.into_iter().map(|c| (c.event_id, c.aggregate.mean)).collect();

    let mut groups = Vec::new();
    let mut networks = Vec::new();
    let mut mlp_pred: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut heldout: BTreeSet<(u32, usize)> = BTreeSet::new();
    for group in ModelGroup::ALL {
        let data = group_data(group, &FeatureManifest::default_for(group.family()), &trajs, Some(&targets))?;
        let started = std::time::Instant::now();
        let config = MlpConfig {
            seed: cfg.seed,
            ..cfg.mlp.clone()
        };
        let net = train_group(&data, &config)?;
        let seconds = started.elapsed().as_secs_f64();
        let pred = net.predict(&data.features)?;
        for (&(event, k), m) in data.rows.iter().zip(&pred.mean) {
            let series = mlp_pred.entry(event).or_default();
            debug_assert_eq!(series.len(), k);
            series.push(*m);
        }
        heldout.extend(net.report.val_rows.iter().map(|&r| data.rows[r]));
        groups.push(GroupOutcome {
            group,
            rows: data.rows.len(),
            dim: data.manifest.dim(),
            final_train_rmse: net.report.final_train_rmse,
            final_val_rmse: net.report.final_val_rmse,
            seconds,
        });
        networks.push(net);
    }

    let target_list: Vec<Vec<f64>> = trajs.iter().map(|t| targets[&t.event_id].clone()).collect();
    let pcad = calibrate(&CalibrationJob::new(ModelKind::Pcad, cfg.calibration_draws, cfg.seed), &trajs, &target_list)?;
    let drf = calibrate(&CalibrationJob::new(ModelKind::Drf, cfg.calibration_draws, cfg.seed), &trajs, &target_list)?;
    let pcad_out = pcad.best.rescaled_outputs(&trajs)?;
    let drf_out = drf.best.rescaled_outputs(&trajs)?;

    let mut all = Vec::new();
    let mut held = Vec::new();
    for (i, t) in trajs.iter().enumerate() {
        let models = BTreeMap::from([
            ("MLP".to_string(), mlp_pred[&t.event_id].clone()),
            ("PCAD".to_string(), pcad_out[i].clone()),
            ("DRF".to_string(), drf_out[i].clone()),
        ]);
        let ev = ComparisonEvent {
            event_id: t.event_id,
            scenario: t.scenario.family().name().to_string(),
            truth: target_list[i].clone(),
            models,
        };
        let keep: Vec<usize> = (0..t.frames.len()).filter(|k| heldout.contains(&(t.event_id, *k))).collect();
        held.push(ComparisonEvent {
            truth: keep.iter().map(|&k| ev.truth[k]).collect(),
            models: ev
                .models
                .iter()
                .map(|(m, v)| (m.clone(), keep.iter().map(|&k| v[k]).collect()))
                .collect(),
            ..ev.clone()
        });
        all.push(ev);
    }

    Ok(RehearsalResult {
        ratings: ratings.len(),
        retained: retained.len(),
        dropped_participant_events: outcomes.values().map(|o| o.dropped_participants.len()).sum(),
        groups,
        pcad,
        drf,
        comparison: compare_models(&all)?,
        heldout: compare_models(&held)?,
        networks,
    })
}
