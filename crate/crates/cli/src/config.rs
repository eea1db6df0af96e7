use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use riskdecode_core::features::FeatureManifest;
use riskdecode_core::reconstruction::Method;
use riskdecode_core::scenario::{Family, ModelGroup, Scenario};
use riskdecode_core::surrogate::MlpConfig;
use riskdecode_core::synthetic::SyntheticConfig;
use serde::{Deserialize, Serialize};

/// Optional JSON file passed with `--config`. Every field has a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub method: Method,
    pub synthetic: SyntheticConfig,
    pub mlp: MlpConfig,
    pub calibration_draws: usize,
    pub permutations: usize,
    /// Attribute every n-th frame.
    pub explain_stride: usize,
    /// Feature lists keyed by family name (`MB`, `HB`, `LC`, `SVM`).
    pub manifests: BTreeMap<String, Vec<String>>,
    /// Column names of an external ratings file, keyed by canonical name.
    pub ratings_profile: BTreeMap<String, String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            method: Method::Pchip,
            synthetic: SyntheticConfig::default(),
            mlp: MlpConfig::default(),
            calibration_draws: 1000,
            permutations: 64,
            explain_stride: 10,
            manifests: BTreeMap::new(),
            ratings_profile: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn manifest(&self, family: Family) -> Result<FeatureManifest> {
        let m = match self.manifests.get(family.name()) {
            Some(f) => FeatureManifest {
                family,
                features: f.clone(),
            },
            None => FeatureManifest::default_for(family),
        };
        m.validate()?;
        Ok(m)
    }
}

/// What `--scenario` selects: a family, a network group or one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    All,
    Family(Family),
    Group(ModelGroup),
    Scenario(Scenario),
}

impl Selection {
    pub fn parse(s: Option<&str>) -> Result<Self> {
        let Some(s) = s else { return Ok(Selection::All) };
        if let Ok(f) = Family::parse(s) {
            return Ok(Selection::Family(f));
        }
        if let Ok(g) = ModelGroup::parse(s) {
            return Ok(Selection::Group(g));
        }
        if let Ok(sc) = Scenario::parse(s) {
            return Ok(Selection::Scenario(sc));
        }
        bail!("unknown scenario selection `{s}`")
    }

    pub fn includes(&self, sc: Scenario) -> bool {
        match *self {
            Selection::All => true,
            Selection::Family(f) => sc.family() == f,
            Selection::Group(g) => sc.model_group() == g,
            Selection::Scenario(s) => s == sc,
        }
    }

    pub fn groups(&self) -> Vec<ModelGroup> {
        ModelGroup::ALL
            .into_iter()
            .filter(|g| Scenario::ALL.iter().any(|s| s.model_group() == *g && self.includes(*s)))
            .collect()
    }
}
