//! Classical per-channel denoisers and the method comparison table.

pub mod filters;
pub mod wavelet;

use serde::{Deserialize, Serialize};

use crate::channels::{PerFamily, N_TARGETS};
use crate::data::SeriesFrame;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, filled, Aggregate};

pub use filters::{kalman_1d, moving_average, savitzky_golay};
pub use wavelet::wavelet_denoise;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineSpec {
    MovingAvg { window: usize },
    SavGol { window: usize, order: usize },
    /// Variances are estimated from each series when unset.
    Kalman { q: Option<f64>, r: Option<f64> },
    Wavelet { levels: usize },
}

impl BaselineSpec {
    pub fn name(&self) -> String {
        match self {
            Self::MovingAvg { window } => format!("movavg{window}"),
            Self::SavGol { .. } => "savgol".into(),
            Self::Kalman { .. } => "kalman".into(),
            Self::Wavelet { .. } => "wavelet".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MovingAvg { window } if window == 0 || window % 2 == 0 => {
                Err(Error::config(format!("moving-average window must be odd, got {window}")))
            }
            Self::SavGol { window, order } if window % 2 == 0 || order >= window => {
                Err(Error::config(format!("Savitzky-Golay needs an odd window above the order (w={window}, order={order})")))
            }
            Self::Kalman { q, r } if q.is_some_and(|v| !(v > 0.0)) || r.is_some_and(|v| !(v > 0.0)) => {
                Err(Error::config("Kalman variances must be positive"))
            }
            Self::Wavelet { levels: 0 } => Err(Error::config("wavelet levels must be >= 1")),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Self::MovingAvg { window } => moving_average(y, window),
            Self::SavGol { window, order } => savitzky_golay(y, window, order),
            Self::Kalman { q, r } => {
                let (eq, er) = filters::estimate_kalman_variances(y);
                kalman_1d(y, q.unwrap_or(eq), r.unwrap_or(er))
            }
            Self::Wavelet { levels } => wavelet_denoise(y, levels),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub movavg_windows: Vec<usize>,
    pub savgol_window: usize,
    pub savgol_order: usize,
    pub kalman_q: Option<f64>,
    pub kalman_r: Option<f64>,
    pub wavelet_levels: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { movavg_windows: vec![5, 11], savgol_window: 11, savgol_order: 3, kalman_q: None, kalman_r: None, wavelet_levels: 4 }
    }
}

impl BaselineConfig {
    pub fn methods(&self) -> Vec<BaselineSpec> {
        let mut m: Vec<BaselineSpec> = self.movavg_windows.iter().map(|&window| BaselineSpec::MovingAvg { window }).collect();
        m.push(BaselineSpec::SavGol { window: self.savgol_window, order: self.savgol_order });
        m.push(BaselineSpec::Kalman { q: self.kalman_q, r: self.kalman_r });
        m.push(BaselineSpec::Wavelet { levels: self.wavelet_levels });
        m
    }
}

/// Applies a method to every target channel (missing samples interpolated first).
pub fn apply_to_frame(spec: &BaselineSpec, noisy: &SeriesFrame) -> Result<SeriesFrame> {
    spec.validate()?;
    let mut out = noisy.clone();
    for c in 0..N_TARGETS {
        out.targets[c] = spec.apply(&filled(noisy, c))?;
    }
    out.missing.iter_mut().for_each(|m| m.fill(false));
    out.stale.iter_mut().for_each(|s| s.fill(false));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub overall: Aggregate,
    pub families: PerFamily<Aggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    /// Sorted by MAE improvement, best first.
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, method: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_text(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));
        let mut s = format!("{:<10} {:>9} {:>9} {:>9} {:>9} {:>9}\n", "method", "mae%", "snr_dB", "neg%", "smooth%", "hf%");
        for r in &self.rows {
            let a = &r.overall;
            s.push_str(&format!(
                "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
                r.method,
                cell(a.mae_improvement),
                cell(a.snr_improvement),
                cell(a.violation_rate),
                cell(a.smoothness_improvement),
                cell(a.hf_reduction)
            ));
        }
        s
    }
}

/// Metrics for the raw input, every classical method and any extra named
/// outputs (e.g. the trained network), against the clean truth.
pub fn run_comparison(
    noisy: &SeriesFrame,
    clean: &SeriesFrame,
    methods: &[BaselineSpec],
    extra: &[(&str, &SeriesFrame)],
) -> Result<ComparisonTable> {
    let mut rows = Vec::new();
    let mut push = |method: String, output: &SeriesFrame| -> Result<()> {
        let r = evaluate(noisy, output, Some(clean))?;
        rows.push(ComparisonRow { method, overall: r.overall, families: r.families });
        Ok(())
    };
    for (name, out) in extra {
        push(name.to_string(), out)?;
    }
    push("raw".into(), noisy)?;
    for m in methods {
        push(m.name(), &apply_to_frame(m, noisy)?)?;
    }
    let key = |r: &ComparisonRow| r.overall.mae_improvement.unwrap_or(f64::NEG_INFINITY);
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
    Ok(ComparisonTable { rows })
}
