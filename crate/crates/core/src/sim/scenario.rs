//! Plume-crossing scenarios and clean ground-truth generation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{Family, N_TARGETS};
use crate::data::{percentile_abs, SeriesFrame};
use crate::error::{Error, Result};
use crate::rng;

/// One smoke encounter for a channel family. Each member channel receives
/// `peak * channel_ratio[c]` on top of its background.
///
/// The pulse is an asymmetric Gaussian: it rises with width `rise_s`, peaks
/// at `start_s + 3 * rise_s` and decays with width `decay_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub family: Family,
    pub start_s: f64,
    pub peak: f64,
    pub rise_s: f64,
    pub decay_s: f64,
}

impl PulseEvent {
    pub fn peak_time(&self) -> f64 {
        self.start_s + 3.0 * self.rise_s
    }

    /// Unit-peak shape at time `t`.
    pub fn shape(&self, t: f64) -> f64 {
        let c = self.peak_time();
        let width = if t < c { self.rise_s } else { self.decay_s };
        let u = (t - c) / width;
        (-0.5 * u * u).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvProfile {
    pub temp_mean_c: f64,
    pub temp_amp_c: f64,
    pub rh_mean: f64,
    pub rh_amp: f64,
    pub pressure_mean_hpa: f64,
    pub pressure_amp_hpa: f64,
    pub period_s: f64,
}

impl Default for EnvProfile {
    fn default() -> Self {
        Self {
            temp_mean_c: 25.0,
            temp_amp_c: 8.0,
            rh_mean: 50.0,
            rh_amp: 15.0,
            pressure_mean_hpa: 950.0,
            pressure_amp_hpa: 3.0,
            period_s: 5400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlumeScenario {
    pub duration_s: usize,
    pub events: Vec<PulseEvent>,
    /// Physical background level per target channel.
    pub background: Vec<f64>,
    /// Per-channel multiplier applied to the family peak of an event.
    pub channel_ratio: Vec<f64>,
    pub env: EnvProfile,
    /// Platform ground speed per second (m/s).
    pub uav_speed: Vec<f64>,
    pub seed: u64,
}

/// Knobs for [`PlumeScenario::synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub duration_s: usize,
    /// Mean spacing between plume crossings.
    pub mean_event_gap_s: f64,
    pub bc_peak_range: (f64, f64),
    /// Family peak for gas events, in CO-channel units (other gases scale by ratio).
    pub gas_peak_range: (f64, f64),
    pub co2_peak_range: (f64, f64),
    pub rise_range_s: (f64, f64),
    pub decay_range_s: (f64, f64),
    pub env: EnvProfile,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration_s: 7894,
            mean_event_gap_s: 320.0,
            bc_peak_range: (5_000.0, 60_000.0),
            gas_peak_range: (300.0, 3_000.0),
            co2_peak_range: (8.0, 60.0),
            rise_range_s: (3.0, 12.0),
            decay_range_s: (5.0, 30.0),
            env: EnvProfile::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.duration_s == 0 {
            return Err(Error::config("scenario duration must be positive"));
        }
        if !(self.mean_event_gap_s > 0.0) {
            return Err(Error::config("mean_event_gap_s must be positive"));
        }
        for (name, (lo, hi)) in [
            ("bc_peak_range", self.bc_peak_range),
            ("gas_peak_range", self.gas_peak_range),
            ("co2_peak_range", self.co2_peak_range),
            ("rise_range_s", self.rise_range_s),
            ("decay_range_s", self.decay_range_s),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::config(format!("{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Default backgrounds: BC and Gas sit just above zero, CO2 at ambient.
pub fn default_background() -> Vec<f64> {
    let mut b = vec![0.0; N_TARGETS];
    b[..4].copy_from_slice(&[40.0, 30.0, 40.0, 30.0]);
    // no, no2, o3, so2, co, no_2, no2_2, o3_2, co_2 (ppb)
    b[4..13].copy_from_slice(&[0.2, 0.1, 0.1, 0.05, 3.0, 0.2, 0.1, 0.1, 3.0]);
    b[13..].copy_from_slice(&[420.0, 420.0]);
    b
}

pub fn default_channel_ratio() -> Vec<f64> {
    let mut r = vec![1.0; N_TARGETS];
    r[..4].copy_from_slice(&[1.0, 0.78, 0.93, 0.74]);
    r[4..13].copy_from_slice(&[0.08, 0.03, 0.015, 0.006, 1.0, 0.075, 0.028, 0.014, 0.95]);
    r[13..].copy_from_slice(&[1.0, 0.97]);
    r
}

impl PlumeScenario {
    /// Constant backgrounds, no events.
    pub fn quiet(duration_s: usize, seed: u64) -> Self {
        Self {
            duration_s,
            events: Vec::new(),
            background: default_background(),
            channel_ratio: default_channel_ratio(),
            env: EnvProfile::default(),
            uav_speed: vec![1.78; duration_s],
            seed,
        }
    }

    /// Randomized scenario: plume crossings arrive with exponential spacing;
    /// each crossing produces coincident BC, Gas and CO2 pulses whose widths
    /// shrink when the platform moves fast.
    pub fn synthetic(cfg: &ScenarioConfig, seed: u64) -> Self {
        let mut r = rng::stream(seed, "sim.scenario");
        let n = cfg.duration_s;
        let speed = speed_profile(n, &mut r);
        let mut events = Vec::new();
        let mut t = -r.random_range(0.0..cfg.mean_event_gap_s) * 0.5;
        loop {
            t += -cfg.mean_event_gap_s * (1.0 - r.random::<f64>()).ln();
            if t >= n as f64 {
                break;
            }
            let at = (t.max(0.0) as usize).min(n.saturating_sub(1));
            // Faster transects cross the plume in less time.
            let stretch = (1.78 / speed[at].max(0.05)).sqrt().clamp(0.5, 2.0);
            let rise = r.random_range(cfg.rise_range_s.0..cfg.rise_range_s.1) * stretch;
            let decay = r.random_range(cfg.decay_range_s.0..cfg.decay_range_s.1) * stretch;
            let strength = r.random::<f64>();
            for (family, range) in [
                (Family::Bc, cfg.bc_peak_range),
                (Family::Gas, cfg.gas_peak_range),
                (Family::Co2, cfg.co2_peak_range),
            ] {
                // Families share the encounter strength with some scatter.
                let u = (strength + r.random_range(-0.15..0.15)).clamp(0.0, 1.0);
                let peak = range.0 * (range.1 / range.0).powf(u);
                events.push(PulseEvent { family, start_s: t, peak, rise_s: rise, decay_s: decay });
            }
        }
        Self {
            duration_s: n,
            events,
            background: default_background(),
            channel_ratio: default_channel_ratio(),
            env: cfg.env.clone(),
            uav_speed: speed,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.background.len() != N_TARGETS || self.channel_ratio.len() != N_TARGETS {
            return Err(Error::config(format!("scenario background and channel_ratio need {N_TARGETS} entries")));
        }
        if self.background.iter().any(|&b| !(b >= 0.0)) || self.channel_ratio.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::config("scenario backgrounds and ratios must be nonnegative"));
        }
        if let Some(e) = self.events.iter().find(|e| !(e.peak >= 0.0 && e.rise_s > 0.0 && e.decay_s > 0.0)) {
            return Err(Error::config(format!("invalid event {e:?}: peak must be >= 0 and widths > 0")));
        }
        if self.uav_speed.len() != self.duration_s {
            return Err(Error::config("uav_speed profile must cover the scenario duration"));
        }
        Ok(())
    }
}

/// Heavy-tailed speed: mostly hovering, with occasional fast transects.
fn speed_profile(n: usize, r: &mut rng::Rng64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut log_speed: f64 = 1.78f64.ln() - 1.0;
    for _ in 0..n {
        log_speed += 0.02 * ((0.21f64).ln() - log_speed) + 0.12 * (r.random::<f64>() - 0.5);
        out.push(log_speed.exp().clamp(0.0, 8.6));
    }
    out
}

/// Clean 1 Hz ground truth. Channel scales in the metadata are set to the
/// 99th percentile of each channel.
pub fn generate_clean(scenario: &PlumeScenario) -> Result<SeriesFrame> {
    scenario.validate()?;
    let n = scenario.duration_s;
    let mut frame = SeriesFrame::zeros(n);
    for c in 0..N_TARGETS {
        frame.targets[c].fill(scenario.background[c]);
    }
    for e in &scenario.events {
        // Contributions beyond 8 widths are below 1e-13 of the peak.
        let lo = (e.peak_time() - 8.0 * e.rise_s).floor().max(0.0) as usize;
        let hi = ((e.peak_time() + 8.0 * e.decay_s).ceil().max(0.0) as usize).min(n);
        for t in lo..hi {
            let s = e.peak * e.shape(t as f64);
            for c in e.family.channels() {
                frame.targets[c][t] += s * scenario.channel_ratio[c];
            }
        }
    }
    let p = &scenario.env;
    for t in 0..n {
        let phase = 2.0 * std::f64::consts::PI * t as f64 / p.period_s;
        frame.env[0][t] = p.temp_mean_c + p.temp_amp_c * phase.sin();
        frame.env[1][t] = p.rh_mean - p.rh_amp * phase.sin();
        frame.env[2][t] = p.pressure_mean_hpa + p.pressure_amp_hpa * (0.5 * phase).cos();
    }
    for c in 0..N_TARGETS {
        frame.meta[c].scale = percentile_abs(&frame.targets[c], 0.99).max(f64::MIN_POSITIVE);
    }
    Ok(frame)
}
