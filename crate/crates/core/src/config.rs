//! Run configuration: a single TOML document with `[scenario]`,
//! `[corruption]`, `[model]`, `[train]` and `[baselines]` tables plus a
//! top-level `seed`. Individual keys can be overridden with dotted paths.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::model::{ModelConfig, Variant};
use crate::sim::{CorruptionConfig, ScenarioConfig};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Variant,
    pub dropout: Option<f64>,
    pub softplus_beta: Option<f64>,
    /// Overrides the variant's positivity weight for every family.
    pub positivity_weight: Option<f64>,
    /// Overrides the variant's smoothness weight for every family.
    pub smooth_weight: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { variant: Variant::Lean, dropout: None, softplus_beta: None, positivity_weight: None, smooth_weight: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the simulator, the model initialisation and the trainer; each
    /// consumer draws from its own named stream.
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub corruption: CorruptionConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub baselines: BaselineConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    /// Sets `key` (e.g. `corruption.noise_sigma`) to `value`, parsed as a
    /// TOML value, or as a bare string when that fails.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut root = toml::Value::try_from(&*self).map_err(|e| Error::config(e.to_string()))?;
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::config(format!("empty config key `{key}`")))?;
        let mut table = root.as_table_mut().expect("config serializes to a table");
        for p in parts {
            table = table
                .get_mut(p)
                .and_then(toml::Value::as_table_mut)
                .ok_or_else(|| Error::config(format!("unknown config section `{p}` in `{key}`")))?;
        }
        table.insert(leaf.to_string(), parsed);
        let updated: Self = root.try_into().map_err(|e| Error::config(format!("cannot apply `{key} = {value}`: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        let mut m = ModelConfig::for_variant(self.model.variant);
        if let Some(d) = self.model.dropout {
            m.dropout = d;
        }
        if let Some(b) = self.model.softplus_beta {
            m.softplus_beta = b;
        }
        m.init_seed = self.seed;
        m
    }

    pub fn loss_weights(&self) -> LossWeights {
        let mut w = LossWeights::for_variant(self.model.variant);
        if let Some(p) = self.model.positivity_weight {
            w.positivity = w.positivity.map(|_, _| p);
        }
        if let Some(s) = self.model.smooth_weight {
            w.smooth = w.smooth.map(|_, _| s);
        }
        w
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.corruption.validate()?;
        self.model_config().validate()?;
        self.train.validate()?;
        for m in self.baselines.methods() {
            m.validate()?;
        }
        for (name, w) in [("positivity_weight", self.model.positivity_weight), ("smooth_weight", self.model.smooth_weight)] {
            if w.is_some_and(|v| !(v >= 0.0)) {
                return Err(Error::config(format!("model.{name} must be non-negative")));
            }
        }
        Ok(())
    }
}
