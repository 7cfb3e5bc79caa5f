//! The fixed 15-channel target layout (BC 4, Gas 9, CO2 2) and the three
//! environmental channels.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Sensor family. Each family owns one decoder head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bc,
    Gas,
    Co2,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Bc, Family::Gas, Family::Co2];

    pub fn n_channels(self) -> usize {
        match self {
            Family::Bc => 4,
            Family::Gas => 9,
            Family::Co2 => 2,
        }
    }

    /// Index of the family's first channel in the concatenated layout.
    pub fn offset(self) -> usize {
        match self {
            Family::Bc => 0,
            Family::Gas => 4,
            Family::Co2 => 13,
        }
    }

    pub fn channels(self) -> std::ops::Range<usize> {
        self.offset()..self.offset() + self.n_channels()
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Bc => "bc",
            Family::Gas => "gas",
            Family::Co2 => "co2",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Family::Bc => "ng/m3",
            Family::Gas => "ppb",
            Family::Co2 => "ppm",
        }
    }

    pub fn of_channel(channel: usize) -> Family {
        match channel {
            0..=3 => Family::Bc,
            4..=12 => Family::Gas,
            _ => Family::Co2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Bc => "BC",
            Family::Gas => "Gas",
            Family::Co2 => "CO2",
        })
    }
}

/// One value per family.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerFamily<T> {
    pub bc: T,
    pub gas: T,
    pub co2: T,
}

impl<T> PerFamily<T> {
    pub fn from_fn(mut f: impl FnMut(Family) -> T) -> Self {
        Self { bc: f(Family::Bc), gas: f(Family::Gas), co2: f(Family::Co2) }
    }

    pub fn get(&self, family: Family) -> &T {
        match family {
            Family::Bc => &self.bc,
            Family::Gas => &self.gas,
            Family::Co2 => &self.co2,
        }
    }

    pub fn get_mut(&mut self, family: Family) -> &mut T {
        match family {
            Family::Bc => &mut self.bc,
            Family::Gas => &mut self.gas,
            Family::Co2 => &mut self.co2,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Family, &T) -> U) -> PerFamily<U> {
        PerFamily::from_fn(|fam| f(fam, self.get(fam)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Family, &T)> {
        Family::ALL.into_iter().map(move |f| (f, self.get(f)))
    }
}

pub const N_TARGETS: usize = 15;
pub const N_ENV: usize = 3;

/// Target channel names in layout order.
pub const TARGET_NAMES: [&str; N_TARGETS] = [
    "bc_uv",
    "bc_ir",
    "bc_uv_2",
    "bc_ir_2",
    "gas_no",
    "gas_no2",
    "gas_o3",
    "gas_so2",
    "gas_co",
    "gas_no_2",
    "gas_no2_2",
    "gas_o3_2",
    "gas_co_2",
    "co2_scd30",
    "co2_li830",
];

pub const ENV_NAMES: [&str; N_ENV] = ["env_t", "env_rh", "env_p"];

/// Index of a target channel by name.
pub fn target_index(name: &str) -> Option<usize> {
    TARGET_NAMES.iter().position(|n| *n == name)
}

/// Per-channel descriptive metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub name: String,
    pub family: Family,
    pub unit: String,
    /// Characteristic magnitude of the channel, strictly positive.
    pub scale: f64,
}

impl ChannelMeta {
    pub fn default_layout() -> Vec<ChannelMeta> {
        TARGET_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let family = Family::of_channel(i);
                ChannelMeta { name: (*name).to_string(), family, unit: family.unit().to_string(), scale: 1.0 }
            })
            .collect()
    }
}
