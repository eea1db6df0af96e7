//! Glue shared by the CLI and the synthetic rehearsal: catalog simulation,
//! per-group datasets and trained surrogate bundles.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{build_features, zscore_apply, zscore_fit, FeatureManifest, NormStats, UncertaintySigmas};
use crate::matrix::Matrix;
use crate::models::PcadParams;
use crate::scenario::{enumerate_events, simulate_event, EventTrajectory, ModelGroup};
use crate::surrogate::{mlp_predict, mlp_train, MlpConfig, MlpWeights, Prediction, TrainReport};

/// Every catalog event, simulated, in event-id order.
pub fn simulate_catalog() -> Result<Vec<EventTrajectory>> {
    enumerate_events().par_iter().map(simulate_event).collect()
}

/// Uncertainty magnitudes used for the uncertain-velocity features.
pub fn feature_sigmas() -> UncertaintySigmas {
    PcadParams::default().sigmas()
}

/// Stacked raw features and targets of one network's events.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupData {
    pub group: ModelGroup,
    pub manifest: FeatureManifest,
    /// `(event_id, frame index)` per row.
    pub rows: Vec<(u32, usize)>,
    pub features: Matrix,
    pub targets: Vec<f64>,
}

/// Rows for `group` from trajectories with a target curve in `targets`;
/// with `targets = None` the target column is empty.
pub fn group_data(
    group: ModelGroup,
    manifest: &FeatureManifest,
    trajs: &[EventTrajectory],
    targets: Option<&BTreeMap<u32, Vec<f64>>>,
) -> Result<GroupData> {
    let sigmas = feature_sigmas();
    let mut parts = Vec::new();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for t in trajs.iter().filter(|t| t.scenario.model_group() == group) {
        if let Some(map) = targets {
            let Some(curve) = map.get(&t.event_id) else { continue };
            if curve.len() != t.frames.len() {
                return Err(Error::GridMismatch);
            }
            y.extend_from_slice(curve);
        }
        parts.push(build_features(t, manifest, &sigmas)?);
        rows.extend((0..t.frames.len()).map(|k| (t.event_id, k)));
    }
    if parts.is_empty() {
        return Err(Error::InvalidConfig(format!("no events available for {group}")));
    }
    Ok(GroupData {
        group,
        manifest: manifest.clone(),
        rows,
        features: Matrix::vstack(&parts)?,
        targets: y,
    })
}

/// Everything needed to reuse a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedSurrogate {
    pub group: ModelGroup,
    pub config: MlpConfig,
    pub norm: NormStats,
    pub weights: MlpWeights,
    pub report: TrainReport,
    /// Mean of the normalized training rows; the attribution reference.
    pub baseline: Vec<f64>,
}

impl TrainedSurrogate {
    pub fn normalize(&self, raw: &Matrix) -> Result<Matrix> {
        zscore_apply(raw, &self.norm)
    }

    pub fn predict(&self, raw: &Matrix) -> Result<Prediction> {
        mlp_predict(&self.weights, &self.normalize(raw)?)
    }
}

/// Fits normalization on all rows of the group and trains its network.
pub fn train_group(data: &GroupData, config: &MlpConfig) -> Result<TrainedSurrogate> {
    let norm = zscore_fit(&data.features, &data.manifest.features)?;
    let x = zscore_apply(&data.features, &norm)?;
    let config = MlpConfig {
        input_dim: x.cols,
        ..config.clone()
    };
    let (weights, report) = mlp_train(&x, &data.targets, &config)?;
    let mut baseline = vec![0.0; x.cols];
    for &r in &report.train_rows {
        for (b, v) in baseline.iter_mut().zip(x.row(r)) {
            *b += v;
        }
    }
    let n = report.train_rows.len().max(1) as f64;
    baseline.iter_mut().for_each(|b| *b /= n);
    Ok(TrainedSurrogate {
        group: data.group,
        config,
        norm,
        weights,
        report,
        baseline,
    })
}
