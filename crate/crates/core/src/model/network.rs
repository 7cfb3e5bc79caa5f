//! Shared dilated TCN trunk, environmental MLP and per-family heads.

use rand::Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::channels::{Family, PerFamily, N_ENV, N_TARGETS};
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::{Bindings, ParamStore};
use crate::rng::{self, Rng64};

#[derive(Debug, Clone, PartialEq)]
pub struct Pc2daeModel {
    pub config: ModelConfig,
    pub params: ParamStore,
}

fn uniform(r: &mut Rng64, shape: &[usize], bound: f64) -> Tensor {
    Tensor::from_fn(shape, |_| r.random_range(-bound..bound))
}

/// Conv weight `[out, in, k]` and bias `[out]` with the fan-in bound `1/sqrt(in * k)`.
fn add_conv(p: &mut ParamStore, r: &mut Rng64, name: &str, c_out: usize, c_in: usize, k: usize) {
    let bound = 1.0 / ((c_in * k) as f64).sqrt();
    p.insert(format!("{name}.weight"), uniform(r, &[c_out, c_in, k], bound));
    p.insert(format!("{name}.bias"), uniform(r, &[c_out], bound));
}

impl Pc2daeModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut r = rng::stream(config.init_seed, "model.init");
        let mut p = ParamStore::new();
        let k = config.kernel_size;
        for (i, (c_in, c_out, _)) in config.block_plan().into_iter().enumerate() {
            add_conv(&mut p, &mut r, &format!("trunk.{i}.conv"), c_out, c_in, k);
            p.insert(format!("trunk.{i}.norm.gamma"), Tensor::full(&[c_out], 1.0));
            p.insert(format!("trunk.{i}.norm.beta"), Tensor::zeros(&[c_out]));
            if c_in != c_out {
                add_conv(&mut p, &mut r, &format!("trunk.{i}.res"), c_out, c_in, 1);
            }
        }
        let de = config.env_dim;
        add_conv(&mut p, &mut r, "env.fc1", de, N_ENV, 1);
        add_conv(&mut p, &mut r, "env.fc2", de, de, 1);
        let h = config.hidden();
        let a = config.attention_width();
        for fam in Family::ALL {
            let n = fam.n_channels();
            let f = fam.name();
            add_conv(&mut p, &mut r, &format!("head.{f}.att.fc1"), a, h, 1);
            add_conv(&mut p, &mut r, &format!("head.{f}.att.fc2"), h, a, 1);
            add_conv(&mut p, &mut r, &format!("head.{f}.env"), h, de, 1);
            add_conv(&mut p, &mut r, &format!("head.{f}.proj"), n, h, 1);
            p.insert(format!("head.{f}.smooth.kernel"), Tensor::zeros(&[n, config.smoothing_kernel]));
            p.insert(format!("head.{f}.smooth.alpha0"), Tensor::zeros(&[1]));
        }
        Ok(Self { config, params: p })
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    fn conv(&self, tape: &mut Tape, b: &Bindings, name: &str, x: Var, dilation: usize, padding: usize) -> Result<Var> {
        let w = b.var(&format!("{name}.weight"));
        let bias = b.var(&format!("{name}.bias"));
        tape.conv1d(x, w, Some(bias), dilation, padding, 1)
    }

    /// `Dropout(ELU(GroupNorm(Conv(x)))) + Residual(x)`.
    pub fn tcn_block(
        &self,
        tape: &mut Tape,
        b: &Bindings,
        i: usize,
        x: Var,
        rng: Option<&mut Rng64>,
    ) -> Result<Var> {
        let (c_in, c_out, d) = self.config.block_plan()[i];
        let pad = d * (self.config.kernel_size - 1) / 2;
        let y = self.conv(tape, b, &format!("trunk.{i}.conv"), x, d, pad)?;
        let gamma = b.var(&format!("trunk.{i}.norm.gamma"));
        let beta = b.var(&format!("trunk.{i}.norm.beta"));
        let y = tape.group_norm(y, self.config.groups, gamma, beta, self.config.norm_eps)?;
        let y = tape.elu(y);
        let y = tape.dropout(y, self.config.dropout, rng)?;
        let res = if c_in == c_out { x } else { self.conv(tape, b, &format!("trunk.{i}.res"), x, 1, 0)? };
        tape.add(y, res)
    }

    /// Encoder, blocks 0..3.
    pub fn encode(&self, tape: &mut Tape, b: &Bindings, x: Var, mut rng: Option<&mut Rng64>) -> Result<Var> {
        let shape = tape.shape(x);
        if shape.len() != 3 || shape[1] != N_TARGETS {
            return Err(Error::contract(format!("encoder expects [B, {N_TARGETS}, T], got {shape:?}")));
        }
        let mut h = x;
        for i in 0..3 {
            h = self.tcn_block(tape, b, i, h, rng.as_deref_mut())?;
        }
        Ok(h)
    }

    /// Decoder, blocks 3..6.
    pub fn decode(&self, tape: &mut Tape, b: &Bindings, z: Var, mut rng: Option<&mut Rng64>) -> Result<Var> {
        let mut h = z;
        for i in 3..6 {
            h = self.tcn_block(tape, b, i, h, rng.as_deref_mut())?;
        }
        Ok(h)
    }

    pub fn trunk(&self, tape: &mut Tape, b: &Bindings, x: Var, mut rng: Option<&mut Rng64>) -> Result<Var> {
        let z = self.encode(tape, b, x, rng.as_deref_mut())?;
        self.decode(tape, b, z, rng)
    }

    /// Per-time-step MLP `3 -> D_e -> D_e` with ELU.
    pub fn encode_env(&self, tape: &mut Tape, b: &Bindings, e: Var) -> Result<Var> {
        let shape = tape.shape(e);
        if shape.len() != 3 || shape[1] != N_ENV {
            return Err(Error::contract(format!("env encoder expects [B, {N_ENV}, T], got {shape:?}")));
        }
        let h = self.conv(tape, b, "env.fc1", e, 1, 0)?;
        let h = tape.elu(h);
        self.conv(tape, b, "env.fc2", h, 1, 0)
    }

    /// Attention gate, additive conditioning, projection, activation, smoothing.
    pub fn head_forward(&self, tape: &mut Tape, b: &Bindings, fam: Family, h: Var, e_embed: Var) -> Result<Var> {
        let f = fam.name();
        let s = tape.mean_last(h)?;
        let s = self.conv(tape, b, &format!("head.{f}.att.fc1"), s, 1, 0)?;
        let s = tape.relu(s);
        let s = self.conv(tape, b, &format!("head.{f}.att.fc2"), s, 1, 0)?;
        let gate = tape.sigmoid(s);
        let h = tape.mul(h, gate)?;
        let cond = self.conv(tape, b, &format!("head.{f}.env"), e_embed, 1, 0)?;
        let h = tape.add(h, cond)?;
        let y = self.conv(tape, b, &format!("head.{f}.proj"), h, 1, 0)?;
        let y = if self.config.constrained { tape.softplus(y, self.config.softplus_beta)? } else { y };
        smooth(tape, y, b.var(&format!("head.{f}.smooth.kernel")), b.var(&format!("head.{f}.smooth.alpha0")))
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        b: &Bindings,
        x: Var,
        e: Var,
        rng: Option<&mut Rng64>,
    ) -> Result<PerFamily<Var>> {
        let (xs, es) = (tape.shape(x).to_vec(), tape.shape(e).to_vec());
        if xs.len() == 3 && es.len() == 3 && (xs[0] != es[0] || xs[2] != es[2]) {
            return Err(Error::contract(format!("input {xs:?} and env {es:?} disagree on batch or length")));
        }
        let h = self.trunk(tape, b, x, rng)?;
        let emb = self.encode_env(tape, b, e)?;
        let bc = self.head_forward(tape, b, Family::Bc, h, emb)?;
        let gas = self.head_forward(tape, b, Family::Gas, h, emb)?;
        let co2 = self.head_forward(tape, b, Family::Co2, h, emb)?;
        Ok(PerFamily { bc, gas, co2 })
    }

    /// Evaluation-mode forward pass returning `[B, N_TARGETS, T]`.
    pub fn predict(&self, inputs: &Tensor, env: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let b = self.params.bind(&mut tape);
        let x = tape.constant(inputs.clone());
        let e = tape.constant(env.clone());
        let out = self.forward(&mut tape, &b, x, e, None)?;
        Ok(merge_families(&out.map(|_, &v| tape.value(v).clone())))
    }
}

/// `alpha * (softmax(K) * pad(y)) + (1 - alpha) * y` with `alpha = sigmoid(alpha0)`,
/// depthwise along time with edge-replicate padding. Both blend weights are
/// evaluated as sigmoids so neither can round to a cancelling subtraction.
pub fn smooth(tape: &mut Tape, y: Var, kernel: Var, alpha0: Var) -> Result<Var> {
    let ks = tape.shape(kernel).to_vec();
    let n = tape.shape(y)[1];
    if ks.len() != 2 || ks[0] != n {
        return Err(Error::contract(format!("smoothing kernel {ks:?} does not match {n} channels")));
    }
    let k = ks[1];
    let weights = tape.softmax(kernel, 1)?;
    let weights = tape.reshape(weights, vec![n, 1, k])?;
    let padded = tape.pad_replicate(y, k / 2, k / 2)?;
    let filtered = tape.conv1d(padded, weights, None, 1, 0, n)?;
    let a0 = tape.reshape(alpha0, vec![1, 1, 1])?;
    let alpha = tape.sigmoid(a0);
    let neg = tape.scale(a0, -1.0);
    let keep = tape.sigmoid(neg);
    let s = tape.mul(filtered, alpha)?;
    let r = tape.mul(y, keep)?;
    tape.add(s, r)
}

/// Per-family channel slices of a `[B, N_TARGETS, T]` tensor.
pub fn split_families(t: &Tensor) -> PerFamily<Tensor> {
    let &[b, c, len] = t.shape() else { panic!("split_families expects rank 3") };
    assert_eq!(c, N_TARGETS);
    PerFamily::from_fn(|fam| {
        let n = fam.n_channels();
        let mut data = Vec::with_capacity(b * n * len);
        for bi in 0..b {
            let start = (bi * c + fam.offset()) * len;
            data.extend_from_slice(&t.data()[start..start + n * len]);
        }
        Tensor::new(vec![b, n, len], data).unwrap()
    })
}

pub fn merge_families(parts: &PerFamily<Tensor>) -> Tensor {
    let b = parts.bc.shape()[0];
    let len = parts.bc.shape()[2];
    let mut data = Vec::with_capacity(b * N_TARGETS * len);
    for bi in 0..b {
        for fam in Family::ALL {
            let p = parts.get(fam);
            let n = fam.n_channels();
            data.extend_from_slice(&p.data()[bi * n * len..(bi + 1) * n * len]);
        }
    }
    Tensor::new(vec![b, N_TARGETS, len], data).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts_in_band() {
        let lean = Pc2daeModel::new(ModelConfig::lean()).unwrap().param_count();
        let wide = Pc2daeModel::new(ModelConfig::wide()).unwrap().param_count();
        assert!((17_000..=25_000).contains(&lean), "lean {lean}");
        assert!((170_000..=240_000).contains(&wide), "wide {wide}");
    }

    #[test]
    fn split_merge_round_trip() {
        let t = Tensor::from_fn(&[2, N_TARGETS, 7], |i| i as f64);
        assert_eq!(merge_families(&split_families(&t)), t);
    }

    #[test]
    fn zeros_input_gives_positive_finite_output() {
        let m = Pc2daeModel::new(ModelConfig::lean()).unwrap();
        let y = m.predict(&Tensor::zeros(&[2, N_TARGETS, 128]), &Tensor::zeros(&[2, N_ENV, 128])).unwrap();
        assert_eq!(y.shape(), &[2, N_TARGETS, 128]);
        assert!(y.data().iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn wrong_channel_count_is_contract_error() {
        let m = Pc2daeModel::new(ModelConfig::miniature()).unwrap();
        let err = m.predict(&Tensor::zeros(&[1, 14, 32]), &Tensor::zeros(&[1, N_ENV, 32])).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
