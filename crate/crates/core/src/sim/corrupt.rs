//! Sensor corruption chain applied to clean simulator output.
//!
//! Stages run in a fixed order: cross-sensitivity mixing, optional EC
//! calibration mismatch, first-order response lag, baseline drift, additive
//! Gaussian noise, staleness hold, missing-value blanking.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{Family, N_TARGETS};
use crate::data::SeriesFrame;
use crate::error::{Error, Result};
use crate::rng;
use crate::sim::ec::{ec_compensate, EcChannelModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionConfig {
    /// Noise standard deviation as a fraction of each channel's scale.
    pub noise_sigma: f64,
    /// Drift standard deviation after one hour, as a fraction of channel scale.
    pub drift_rate: f64,
    /// Row-major `N_TARGETS x N_TARGETS` leakage matrix on normalized units.
    pub cross_sensitivity: Vec<Vec<f64>>,
    /// Per-channel t90 in samples; 0 disables the lag.
    pub lag_t90_s: Vec<f64>,
    /// Per-channel hold factor; 1 disables staleness.
    pub staleness_period: Vec<usize>,
    pub missing_rate: f64,
    /// Relative gain error of the field calibration applied to gas channels.
    pub ec_mismatch: f64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        let mut lag = vec![0.0; N_TARGETS];
        lag[Family::Bc.channels()].fill(2.0);
        lag[Family::Gas.channels()].fill(4.0);
        lag[13] = 8.0;
        lag[14] = 2.0;
        let mut stale = vec![1; N_TARGETS];
        stale[13] = 2;
        Self {
            noise_sigma: 0.05,
            drift_rate: 0.01,
            cross_sensitivity: default_cross_sensitivity(),
            lag_t90_s: lag,
            staleness_period: stale,
            missing_rate: 0.01,
            ec_mismatch: 0.0,
        }
    }
}

/// O3 leaks into NO2 at 0.2 on both boards; other pairs within the Gas family
/// leak at 0.05; nothing leaks across families.
pub fn default_cross_sensitivity() -> Vec<Vec<f64>> {
    let mut m = identity_matrix();
    let gas = Family::Gas.channels();
    for i in gas.clone() {
        for j in gas.clone() {
            if i != j {
                m[i][j] = 0.05;
            }
        }
    }
    // (no2, o3) pairs on the two boards.
    for (no2, o3) in [(5, 6), (10, 11)] {
        m[no2][o3] = 0.2;
    }
    m
}

pub fn identity_matrix() -> Vec<Vec<f64>> {
    (0..N_TARGETS).map(|i| (0..N_TARGETS).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

impl CorruptionConfig {
    /// A configuration whose every stage is the identity.
    pub fn identity() -> Self {
        Self {
            noise_sigma: 0.0,
            drift_rate: 0.0,
            cross_sensitivity: identity_matrix(),
            lag_t90_s: vec![0.0; N_TARGETS],
            staleness_period: vec![1; N_TARGETS],
            missing_rate: 0.0,
            ec_mismatch: 0.0,
        }
    }

    /// Gaussian noise on top of the clean truth, keeping the default
    /// staleness and missing-sample stages. Lag, drift and mixing are off:
    /// this is the noise-injection protocol used for the filter comparison.
    pub fn noise_injection(sigma: f64) -> Self {
        let d = Self::default();
        Self { noise_sigma: sigma, staleness_period: d.staleness_period, missing_rate: d.missing_rate, ..Self::identity() }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.cross_sensitivity;
        if m.len() != N_TARGETS || m.iter().any(|r| r.len() != N_TARGETS) {
            return Err(Error::config(format!("cross_sensitivity must be {N_TARGETS}x{N_TARGETS}")));
        }
        if let Some(i) = (0..N_TARGETS).find(|&i| m[i][i] != 1.0) {
            return Err(Error::config(format!("cross_sensitivity diagonal must be 1 (row {i})")));
        }
        if self.lag_t90_s.len() != N_TARGETS || self.lag_t90_s.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::config(format!("lag_t90_s needs {N_TARGETS} nonnegative entries")));
        }
        if self.staleness_period.len() != N_TARGETS || self.staleness_period.contains(&0) {
            return Err(Error::config(format!("staleness_period needs {N_TARGETS} entries >= 1")));
        }
        if !(self.noise_sigma >= 0.0 && self.drift_rate >= 0.0) {
            return Err(Error::config("noise_sigma and drift_rate must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::config("missing_rate must lie in [0, 1)"));
        }
        if !(self.ec_mismatch > -1.0) {
            return Err(Error::config("ec_mismatch must exceed -1"));
        }
        Ok(())
    }
}

/// Lag coefficient whose step response reaches 90% after `t90` samples.
pub fn lag_coefficient(t90: f64) -> f64 {
    (-std::f64::consts::LN_10 / t90).exp()
}

/// First-order low-pass `y[t] = a y[t-1] + (1-a) x[t]`, started at steady state.
pub fn lag_filter(x: &[f64], t90: f64) -> Vec<f64> {
    if t90 <= 0.0 || x.is_empty() {
        return x.to_vec();
    }
    let a = lag_coefficient(t90);
    let mut y = Vec::with_capacity(x.len());
    let mut prev = x[0];
    for &v in x {
        prev = a * prev + (1.0 - a) * v;
        y.push(prev);
    }
    y
}

pub fn corrupt(clean: &SeriesFrame, cfg: &CorruptionConfig, seed: u64) -> Result<SeriesFrame> {
    clean.validate()?;
    cfg.validate()?;
    let n = clean.len();
    let scale: Vec<f64> = clean.meta.iter().map(|m| m.scale).collect();
    let mut out = clean.clone();

    let m = &cfg.cross_sensitivity;
    if *m != identity_matrix() {
        for i in 0..N_TARGETS {
            for j in (0..N_TARGETS).filter(|&j| j != i && m[i][j] != 0.0) {
                let k = m[i][j] * scale[i] / scale[j];
                for t in 0..n {
                    out.targets[i][t] += k * clean.targets[j][t];
                }
            }
        }
    }

    if cfg.ec_mismatch != 0.0 {
        apply_ec_mismatch(&mut out, cfg.ec_mismatch)?;
    }

    for c in 0..N_TARGETS {
        if cfg.lag_t90_s[c] > 0.0 {
            out.targets[c] = lag_filter(&out.targets[c], cfg.lag_t90_s[c]);
        }
    }

    if cfg.drift_rate > 0.0 {
        let mut r = rng::stream(seed, "sim.corrupt.drift");
        for c in 0..N_TARGETS {
            let step = cfg.drift_rate * scale[c] / 3600f64.sqrt();
            let mut walk = 0.0;
            for v in out.targets[c].iter_mut() {
                walk += step * r.sample::<f64, _>(StandardNormal);
                *v += walk;
            }
        }
    }

    if cfg.noise_sigma > 0.0 {
        let mut r = rng::stream(seed, "sim.corrupt.noise");
        for c in 0..N_TARGETS {
            let sd = cfg.noise_sigma * scale[c];
            for v in out.targets[c].iter_mut() {
                *v += sd * r.sample::<f64, _>(StandardNormal);
            }
        }
    }

    for c in 0..N_TARGETS {
        let k = cfg.staleness_period[c];
        if k > 1 {
            for t in (1..n).filter(|t| t % k == k - 1) {
                out.targets[c][t] = out.targets[c][t - 1];
                out.stale[c][t] = true;
            }
        }
    }

    if cfg.missing_rate > 0.0 {
        let mut r = rng::stream(seed, "sim.corrupt.missing");
        for c in 0..N_TARGETS {
            for t in 0..n {
                if r.random::<f64>() < cfg.missing_rate {
                    out.targets[c][t] = f64::NAN;
                    out.missing[c][t] = true;
                }
            }
        }
    }
    Ok(out)
}

/// Expresses each gas signal as electrode voltages under a reference
/// calibration, then recovers it with a gain that is off by `mismatch`.
fn apply_ec_mismatch(frame: &mut SeriesFrame, mismatch: f64) -> Result<()> {
    let temp = frame.env[0].clone();
    for c in Family::Gas.channels() {
        let truth = EcChannelModel::representative(1000.0);
        let mut field = truth.clone();
        field.gain = truth.gain.scaled(1.0 + mismatch);
        let ae: Vec<f64> = temp.iter().map(|t| truth.ae0 + 2e-4 * (t - truth.t0)).collect();
        let we: Vec<f64> =
            frame.targets[c].iter().zip(&ae).zip(&temp).map(|((&s, &a), &t)| truth.working_voltage_for(s, a, t)).collect();
        frame.targets[c] = ec_compensate(&we, &ae, &temp, &field)?;
    }
    Ok(())
}
