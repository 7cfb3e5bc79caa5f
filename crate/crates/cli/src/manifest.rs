use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pc2dae_core::config::RunConfig;
use pc2dae_core::{Error, Result};
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub timings: BTreeMap<String, f64>,
    /// Command-specific fields, written at the top level.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: serde_json::to_value(cfg).map_err(|e| Error::Format(e.to_string()))?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings: BTreeMap::new(),
            extra: BTreeMap::new(),
            started: Some(Instant::now()),
        })
    }

    pub fn input(&mut self, name: &str, path: &Path) -> &mut Self {
        self.inputs.insert(name.into(), path.to_path_buf());
        self
    }

    pub fn output(&mut self, name: &str, path: &Path) -> &mut Self {
        self.outputs.insert(name.into(), path.to_path_buf());
        self
    }

    pub fn extra(&mut self, name: &str, value: impl Serialize) -> Result<&mut Self> {
        let v = serde_json::to_value(value).map_err(|e| Error::Format(e.to_string()))?;
        self.extra.insert(name.into(), v);
        Ok(self)
    }

    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        if let Some(t) = self.started {
            self.timings.insert("wall_seconds".into(), t.elapsed().as_secs_f64());
        }
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
