use crate::channels::{ChannelMeta, Family, N_ENV, N_TARGETS};
use crate::error::{Error, Result};

/// Synchronized 1 Hz multi-channel series.
///
/// Values are stored channel-major: `targets[c][t]`, `env[e][t]`. Missing
/// target samples hold `NaN` and are flagged in `missing`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    pub timestamps: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
    /// Temperature (degC), relative humidity (%), pressure (hPa).
    pub env: Vec<Vec<f64>>,
    pub stale: Vec<Vec<bool>>,
    pub missing: Vec<Vec<bool>>,
    pub meta: Vec<ChannelMeta>,
}

impl SeriesFrame {
    /// A frame with the default channel layout, timestamps `0..len`, zero
    /// values and no flags.
    pub fn zeros(len: usize) -> Self {
        Self {
            timestamps: (0..len).map(|t| t as f64).collect(),
            targets: vec![vec![0.0; len]; N_TARGETS],
            env: vec![vec![0.0; len]; N_ENV],
            stale: vec![vec![false; len]; N_TARGETS],
            missing: vec![vec![false; len]; N_TARGETS],
            meta: ChannelMeta::default_layout(),
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Checks every structural invariant of the frame.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.targets.len() != N_TARGETS || self.stale.len() != N_TARGETS || self.missing.len() != N_TARGETS {
            return Err(Error::Data(format!("frame must hold {N_TARGETS} target channels")));
        }
        if self.env.len() != N_ENV {
            return Err(Error::Data(format!("frame must hold {N_ENV} environmental channels")));
        }
        if self.meta.len() != N_TARGETS {
            return Err(Error::Data("channel metadata does not cover every target channel".into()));
        }
        let rows = self.targets.iter().chain(&self.env).map(Vec::len);
        let flags = self.stale.iter().chain(&self.missing).map(Vec::len);
        if rows.chain(flags).any(|l| l != n) {
            return Err(Error::Data("channel lengths differ from the timestamp count".into()));
        }
        for (i, w) in self.timestamps.windows(2).enumerate() {
            if w[1] - w[0] != 1.0 {
                return Err(Error::Format(format!(
                    "timestamps must advance by exactly 1 s; row {} goes from {} to {}",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        for family in Family::ALL {
            let count = self.meta.iter().filter(|m| m.family == family).count();
            if count != family.n_channels() || self.meta[family.channels()].iter().any(|m| m.family != family) {
                return Err(Error::Data(format!(
                    "family {family} must occupy exactly {} consecutive channels",
                    family.n_channels()
                )));
            }
        }
        if let Some(m) = self.meta.iter().find(|m| !(m.scale > 0.0)) {
            return Err(Error::Data(format!("channel {} has non-positive scale {}", m.name, m.scale)));
        }
        for c in 0..N_TARGETS {
            for t in 0..n {
                if self.missing[c][t] != self.targets[c][t].is_nan() {
                    return Err(Error::Data(format!(
                        "missing mask disagrees with value at channel {} row {t}",
                        self.meta[c].name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rows `start..end` as a new frame.
    pub fn slice(&self, start: usize, end: usize) -> SeriesFrame {
        let cut = |rows: &Vec<Vec<f64>>| rows.iter().map(|r| r[start..end].to_vec()).collect();
        let cut_b = |rows: &Vec<Vec<bool>>| rows.iter().map(|r| r[start..end].to_vec()).collect();
        SeriesFrame {
            timestamps: self.timestamps[start..end].to_vec(),
            targets: cut(&self.targets),
            env: cut(&self.env),
            stale: cut_b(&self.stale),
            missing: cut_b(&self.missing),
            meta: self.meta.clone(),
        }
    }

    /// True when neither stale nor missing.
    pub fn is_valid(&self, channel: usize, t: usize) -> bool {
        !self.stale[channel][t] && !self.missing[channel][t]
    }

    /// Fraction of target samples below zero among non-missing samples.
    pub fn negative_fraction(&self, channels: impl IntoIterator<Item = usize>) -> f64 {
        let (mut neg, mut total) = (0usize, 0usize);
        for c in channels {
            for &v in self.targets[c].iter().filter(|v| !v.is_nan()) {
                total += 1;
                if v < 0.0 {
                    neg += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            neg as f64 / total as f64
        }
    }
}
