//! Denoising quality metrics and their per-family aggregation.
//!
//! Undefined metrics (zero denominators) are `None` and excluded from means.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channels::{Family, PerFamily, N_TARGETS, TARGET_NAMES};
use crate::data::csv_io::fill_linear;
use crate::data::SeriesFrame;
use crate::error::{Error, Result};

/// Ceiling reported for an SNR improvement when the residual vanishes.
pub const SNR_CEILING_DB: f64 = 99.0;
/// Bins strictly above this frequency count as high frequency (1 Hz sampling).
pub const HF_CUTOFF_HZ: f64 = 0.125;

pub fn total_variation(y: &[f64]) -> f64 {
    y.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn smoothness_improvement(input: &[f64], output: &[f64]) -> Option<f64> {
    let tv_in = total_variation(input);
    if tv_in == 0.0 {
        return None;
    }
    Some(100.0 * (tv_in - total_variation(output)) / tv_in)
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect()
}

/// One-sided power `|X_k|^2` for `k = 0..=n/2` of the mean-removed,
/// Hann-windowed series. Bin `k` sits at `k / n` Hz.
pub fn periodogram(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n == 0 {
        return Vec::new();
    }
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = y
        .iter()
        .zip(hann(n))
        .map(|(&v, w)| rustfft::num_complex::Complex::new((v - mean) * w, 0.0))
        .collect();
    fft.process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Power in bins strictly above [`HF_CUTOFF_HZ`], and the total power.
pub fn hf_power(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let p = periodogram(y);
    let hf = p.iter().enumerate().filter(|(k, _)| *k as f64 / n > HF_CUTOFF_HZ).map(|(_, v)| v).sum();
    (hf, p.iter().sum())
}

/// Percentage drop in high-frequency power. Undefined when the input carries
/// essentially none (below `1e-10` of its total power).
pub fn hf_reduction(input: &[f64], output: &[f64]) -> Option<f64> {
    let (hf_in, total_in) = hf_power(input);
    if !(hf_in > 1e-10 * total_in) || hf_in == 0.0 {
        return None;
    }
    let (hf_out, _) = hf_power(output);
    Some(100.0 * (1.0 - hf_out / hf_in))
}

/// Percentage of samples strictly below zero.
pub fn violation_rate(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    100.0 * y.iter().filter(|&&v| v < 0.0).count() as f64 / y.len() as f64
}

pub fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64
}

pub fn mae_improvement(noisy: &[f64], denoised: &[f64], clean: &[f64]) -> Option<f64> {
    let base = mae(noisy, clean);
    if base == 0.0 {
        return None;
    }
    Some(100.0 * (base - mae(denoised, clean)) / base)
}

/// `10 log10(sum clean^2 / sum (x - clean)^2)`; infinite for a perfect match.
pub fn snr_db(x: &[f64], clean: &[f64]) -> f64 {
    let sig: f64 = clean.iter().map(|c| c * c).sum();
    let err: f64 = x.iter().zip(clean).map(|(a, c)| (a - c).powi(2)).sum();
    10.0 * (sig / err).log10()
}

pub fn snr_improvement(noisy: &[f64], denoised: &[f64], clean: &[f64]) -> Option<f64> {
    let sig: f64 = clean.iter().map(|c| c * c).sum();
    let base_err: f64 = noisy.iter().zip(clean).map(|(a, c)| (a - c).powi(2)).sum();
    if sig == 0.0 || base_err == 0.0 {
        return None;
    }
    let d = snr_db(denoised, clean) - snr_db(noisy, clean);
    Some(d.min(SNR_CEILING_DB))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub channel: String,
    pub family: Family,
    pub smoothness_improvement: Option<f64>,
    pub hf_reduction: Option<f64>,
    pub violation_rate: f64,
    pub mae_improvement: Option<f64>,
    pub snr_improvement: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub smoothness_improvement: Option<f64>,
    pub hf_reduction: Option<f64>,
    pub violation_rate: Option<f64>,
    pub mae_improvement: Option<f64>,
    pub snr_improvement: Option<f64>,
}

fn mean_defined(vals: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = vals.into_iter().flatten().collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

impl Aggregate {
    fn of<'a>(items: impl Iterator<Item = Aggregate> + Clone + 'a) -> Aggregate {
        Aggregate {
            smoothness_improvement: mean_defined(items.clone().map(|a| a.smoothness_improvement)),
            hf_reduction: mean_defined(items.clone().map(|a| a.hf_reduction)),
            violation_rate: mean_defined(items.clone().map(|a| a.violation_rate)),
            mae_improvement: mean_defined(items.clone().map(|a| a.mae_improvement)),
            snr_improvement: mean_defined(items.map(|a| a.snr_improvement)),
        }
    }
}

impl From<&ChannelMetrics> for Aggregate {
    fn from(c: &ChannelMetrics) -> Self {
        Aggregate {
            smoothness_improvement: c.smoothness_improvement,
            hf_reduction: c.hf_reduction,
            violation_rate: Some(c.violation_rate),
            mae_improvement: c.mae_improvement,
            snr_improvement: c.snr_improvement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub channels: Vec<ChannelMetrics>,
    pub families: PerFamily<Aggregate>,
    pub overall: Aggregate,
}

impl EvalReport {
    pub fn from_channels(channels: Vec<ChannelMetrics>) -> Self {
        let families = PerFamily::from_fn(|f| {
            Aggregate::of(channels.iter().filter(|c| c.family == f).map(Aggregate::from).collect::<Vec<_>>().into_iter())
        });
        let overall = Aggregate::of([families.bc, families.gas, families.co2].into_iter());
        Self { channels, families, overall }
    }

    /// Mean violation rate over the family's channels.
    pub fn family_violation(&self, f: Family) -> f64 {
        self.families.get(f).violation_rate.unwrap_or(0.0)
    }
}

/// Series as evaluated: missing samples linearly interpolated.
pub fn filled(frame: &SeriesFrame, c: usize) -> Vec<f64> {
    let mut v = frame.targets[c].clone();
    fill_linear(&mut v);
    v
}

/// Per-channel metrics of `output` against `input`, plus MAE/SNR when the
/// clean truth is given.
pub fn evaluate(input: &SeriesFrame, output: &SeriesFrame, clean: Option<&SeriesFrame>) -> Result<EvalReport> {
    for (name, f) in [("output", Some(output)), ("clean", clean)] {
        if let Some(f) = f {
            if f.len() != input.len() {
                return Err(Error::Data(format!("{name} has {} rows, input has {}", f.len(), input.len())));
            }
        }
    }
    let channels = (0..N_TARGETS)
        .map(|c| {
            let x = filled(input, c);
            let y = filled(output, c);
            let truth = clean.map(|f| filled(f, c));
            ChannelMetrics {
                channel: TARGET_NAMES[c].to_string(),
                family: Family::of_channel(c),
                smoothness_improvement: smoothness_improvement(&x, &y),
                hf_reduction: hf_reduction(&x, &y),
                violation_rate: violation_rate(&y),
                mae_improvement: truth.as_ref().and_then(|t| mae_improvement(&x, &y, t)),
                snr_improvement: truth.as_ref().and_then(|t| snr_improvement(&x, &y, t)),
            }
        })
        .collect();
    Ok(EvalReport::from_channels(channels))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"))
}

/// Aligned text with one row per family plus the overall mean.
pub fn report_table(r: &EvalReport) -> String {
    let mut s = format!("{:<8} {:>9} {:>9} {:>9} {:>9} {:>9}\n", "family", "smooth%", "hf%", "neg%", "mae%", "snr_dB");
    let rows = [("BC", r.families.bc), ("Gas", r.families.gas), ("CO2", r.families.co2), ("overall", r.overall)];
    for (name, a) in rows {
        s.push_str(&format!(
            "{:<8} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            name,
            cell(a.smoothness_improvement),
            cell(a.hf_reduction),
            cell(a.violation_rate),
            cell(a.mae_improvement),
            cell(a.snr_improvement)
        ));
    }
    s
}
