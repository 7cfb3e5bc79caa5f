//! Per-channel scaling and its inverse.

use std::fmt::Write as _;
use std::path::Path;

use crate::channels::{ENV_NAMES, N_ENV, N_TARGETS, TARGET_NAMES};
use crate::data::frame::SeriesFrame;
use crate::error::{Error, Result};

/// `q`-quantile of `|x|` over non-NaN values (nearest rank). NaN if empty.
pub fn percentile_abs(x: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = x.iter().filter(|v| !v.is_nan()).map(|v| v.abs()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Factors applied by [`normalize`]. Targets are divided by `target_scale`;
/// environmental channels are standardized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRecord {
    pub target_scale: Vec<f64>,
    pub env_mean: Vec<f64>,
    pub env_std: Vec<f64>,
}

impl ScaleRecord {
    pub fn fit(frame: &SeriesFrame) -> Result<Self> {
        let mut target_scale = Vec::with_capacity(N_TARGETS);
        for (c, series) in frame.targets.iter().enumerate() {
            let p = percentile_abs(series, 0.99);
            if p.is_nan() {
                return Err(Error::Data(format!("channel {} has no observed samples", TARGET_NAMES[c])));
            }
            if p == 0.0 {
                log::warn!("channel {} is identically zero; using unit scale", TARGET_NAMES[c]);
            }
            target_scale.push(if p > 0.0 { p } else { 1.0 });
        }
        let mut env_mean = Vec::with_capacity(N_ENV);
        let mut env_std = Vec::with_capacity(N_ENV);
        for series in &frame.env {
            let n = series.len().max(1) as f64;
            let mean = series.iter().sum::<f64>() / n;
            let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            env_mean.push(mean);
            env_std.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Ok(Self { target_scale, env_mean, env_std })
    }

    pub fn apply(&self, frame: &SeriesFrame) -> SeriesFrame {
        let mut out = frame.clone();
        for c in 0..N_TARGETS {
            out.targets[c].iter_mut().for_each(|v| *v /= self.target_scale[c]);
            out.meta[c].scale = 1.0;
        }
        for e in 0..N_ENV {
            out.env[e].iter_mut().for_each(|v| *v = (*v - self.env_mean[e]) / self.env_std[e]);
        }
        out
    }

    pub fn invert(&self, frame: &SeriesFrame) -> SeriesFrame {
        let mut out = frame.clone();
        for c in 0..N_TARGETS {
            out.targets[c].iter_mut().for_each(|v| *v *= self.target_scale[c]);
            out.meta[c].scale = self.target_scale[c];
        }
        for e in 0..N_ENV {
            out.env[e].iter_mut().for_each(|v| *v = *v * self.env_std[e] + self.env_mean[e]);
        }
        out
    }

    /// Flat `key = value` text, values in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (n, v) in TARGET_NAMES.iter().zip(&self.target_scale) {
            let _ = writeln!(s, "scale.{n} = {v:?}");
        }
        for (n, (m, sd)) in ENV_NAMES.iter().zip(self.env_mean.iter().zip(&self.env_std)) {
            let _ = writeln!(s, "mean.{n} = {m:?}");
            let _ = writeln!(s, "std.{n} = {sd:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("scale record line {}: expected key = value", i + 1)))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("scale record line {}: bad number", i + 1)))?;
            map.insert(k.trim().to_string(), v);
        }
        let get = |k: String| map.get(&k).copied().ok_or_else(|| Error::Format(format!("scale record lacks {k}")));
        let target_scale = TARGET_NAMES.iter().map(|n| get(format!("scale.{n}"))).collect::<Result<Vec<_>>>()?;
        let env_mean = ENV_NAMES.iter().map(|n| get(format!("mean.{n}"))).collect::<Result<Vec<_>>>()?;
        let env_std = ENV_NAMES.iter().map(|n| get(format!("std.{n}"))).collect::<Result<Vec<_>>>()?;
        if target_scale.iter().chain(&env_std).any(|&s| !(s > 0.0)) {
            return Err(Error::Format("scale record holds a non-positive scale".into()));
        }
        Ok(Self { target_scale, env_mean, env_std })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Divides each target channel by the 99th percentile of its absolute values
/// and standardizes the environmental channels.
pub fn normalize(frame: &SeriesFrame) -> Result<(SeriesFrame, ScaleRecord)> {
    let rec = ScaleRecord::fit(frame)?;
    Ok((rec.apply(frame), rec))
}

pub fn denormalize(frame: &SeriesFrame, rec: &ScaleRecord) -> SeriesFrame {
    rec.invert(frame)
}
