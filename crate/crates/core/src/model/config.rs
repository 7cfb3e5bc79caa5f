use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Lean,
    Wide,
    /// Lean with identity output activation and no physics penalties.
    Ablation,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lean" => Ok(Self::Lean),
            "wide" => Ok(Self::Wide),
            "ablation" | "unconstrained" => Ok(Self::Ablation),
            other => Err(Error::config(format!("unknown variant {other:?} (expected lean, wide or ablation)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Lean => "lean",
            Self::Wide => "wide",
            Self::Ablation => "ablation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub encoder_channels: [usize; 3],
    /// The decoder runs `H3 -> H4 -> H5 -> H3`.
    pub decoder_channels: [usize; 2],
    pub env_dim: usize,
    pub softplus_beta: f64,
    pub dropout: f64,
    pub kernel_size: usize,
    pub encoder_dilations: [usize; 3],
    pub decoder_dilations: [usize; 3],
    pub smoothing_kernel: usize,
    pub groups: usize,
    pub norm_eps: f64,
    pub attention_reduction: usize,
    /// Softplus output activation; false only for the ablation.
    pub constrained: bool,
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn lean() -> Self {
        Self {
            variant: Variant::Lean,
            encoder_channels: [20, 28, 20],
            decoder_channels: [28, 20],
            env_dim: 12,
            softplus_beta: 5.0,
            dropout: 0.1,
            kernel_size: 5,
            encoder_dilations: [1, 2, 4],
            decoder_dilations: [4, 2, 1],
            smoothing_kernel: 5,
            groups: 4,
            norm_eps: 1e-5,
            attention_reduction: 4,
            constrained: true,
            init_seed: 0,
        }
    }

    pub fn wide() -> Self {
        Self {
            variant: Variant::Wide,
            encoder_channels: [64, 96, 64],
            decoder_channels: [96, 64],
            env_dim: 16,
            softplus_beta: 3.0,
            dropout: 0.15,
            ..Self::lean()
        }
    }

    pub fn ablation() -> Self {
        Self { variant: Variant::Ablation, constrained: false, ..Self::lean() }
    }

    pub fn for_variant(v: Variant) -> Self {
        match v {
            Variant::Lean => Self::lean(),
            Variant::Wide => Self::wide(),
            Variant::Ablation => Self::ablation(),
        }
    }

    /// Tiny network for exhaustive gradient checks.
    pub fn miniature() -> Self {
        Self {
            encoder_channels: [4, 6, 4],
            decoder_channels: [6, 4],
            env_dim: 3,
            groups: 2,
            ..Self::lean()
        }
    }

    /// `(in, out, dilation)` for the six trunk blocks in order.
    pub fn block_plan(&self) -> Vec<(usize, usize, usize)> {
        let [h1, h2, h3] = self.encoder_channels;
        let [h4, h5] = self.decoder_channels;
        let e = self.encoder_dilations;
        let d = self.decoder_dilations;
        vec![
            (crate::N_TARGETS, h1, e[0]),
            (h1, h2, e[1]),
            (h2, h3, e[2]),
            (h3, h4, d[0]),
            (h4, h5, d[1]),
            (h5, h3, d[2]),
        ]
    }

    pub fn hidden(&self) -> usize {
        self.encoder_channels[2]
    }

    pub fn attention_width(&self) -> usize {
        (self.hidden() / self.attention_reduction).max(1)
    }

    /// Input span of the trunk: `1 + (k - 1) * sum(dilations)`.
    pub fn receptive_field(&self) -> usize {
        let total: usize = self.encoder_dilations.iter().chain(&self.decoder_dilations).sum();
        1 + (self.kernel_size - 1) * total
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size.is_multiple_of(2) || self.smoothing_kernel.is_multiple_of(2) {
            return Err(Error::config("kernel_size and smoothing_kernel must be odd for same-length padding"));
        }
        let widths = self.encoder_channels.iter().chain(&self.decoder_channels);
        if let Some(w) = widths.clone().find(|&&w| w == 0 || self.groups == 0 || w % self.groups != 0) {
            return Err(Error::config(format!("groups={} does not divide channel width {w}", self.groups)));
        }
        if self.encoder_dilations.iter().chain(&self.decoder_dilations).any(|&d| d == 0) {
            return Err(Error::config("dilations must be positive"));
        }
        if self.env_dim == 0 || self.attention_reduction == 0 {
            return Err(Error::config("env_dim and attention_reduction must be positive"));
        }
        if !(self.softplus_beta > 0.0) {
            return Err(Error::config("softplus_beta must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout must lie in [0, 1)"));
        }
        if !(self.norm_eps > 0.0) {
            return Err(Error::config("norm_eps must be positive"));
        }
        Ok(())
    }
}
