//! Mini-batch training with chronological validation and early stopping.

pub mod adam;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::data::window::{make_windows, prepare, Window, WindowBatch, WINDOW};
use crate::data::SeriesFrame;
use crate::error::{Error, Result};
use crate::losses::{total_loss, LossReport, LossWeights};
use crate::model::{split_families, Pc2daeModel};
use crate::rng;

pub use adam::{clip_global_norm, Adam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    /// Targets are the raw inputs.
    Field,
    /// Targets are externally supplied clean series.
    Oracle,
}

impl TrainMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "field" => Ok(Self::Field),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::config(format!("unknown training mode {other:?} (expected field or oracle)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub grad_clip_norm: f64,
    pub seed: u64,
    pub split_fraction: f64,
    pub stride: usize,
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 16,
            max_epochs: 200,
            early_stop_patience: 20,
            grad_clip_norm: 1.0,
            seed: 0,
            split_fraction: 0.8,
            stride: 64,
            mode: TrainMode::Oracle,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::config("split_fraction must lie strictly between 0 and 1"));
        }
        if self.batch_size == 0 || self.stride == 0 {
            return Err(Error::config("batch_size and stride must be positive"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps > 0.0) {
            return Err(Error::config("Adam betas must lie in [0, 1) and eps must be positive"));
        }
        if !(self.grad_clip_norm > 0.0) {
            return Err(Error::config("grad_clip_norm must be positive"));
        }
        Ok(())
    }
}

/// Chronological split at `floor(len * fraction)`.
pub fn split(frame: &SeriesFrame, fraction: f64) -> Result<(SeriesFrame, SeriesFrame)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!("split fraction must lie strictly between 0 and 1, got {fraction}")));
    }
    let cut = (frame.len() as f64 * fraction).floor() as usize;
    if cut < WINDOW || frame.len() - cut < WINDOW {
        return Err(Error::Data(format!(
            "cannot split {} samples at {cut}: each side needs at least {WINDOW}",
            frame.len()
        )));
    }
    Ok((frame.slice(0, cut), frame.slice(cut, frame.len())))
}

/// Training and validation windows, already normalized.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub train: Vec<Window>,
    pub val: Vec<Window>,
    /// Row index of the chronological cut.
    pub cut: usize,
}

impl TrainData {
    pub fn new(inputs: &SeriesFrame, clean: Option<&SeriesFrame>, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let targets = match (cfg.mode, clean) {
            (TrainMode::Oracle, None) => return Err(Error::config("oracle mode needs clean target series")),
            (TrainMode::Oracle, Some(c)) => Some(c),
            (TrainMode::Field, _) => None,
        };
        let (tr_in, va_in) = split(inputs, cfg.split_fraction)?;
        let (tr_t, va_t) = match targets {
            Some(c) => {
                let (a, b) = split(c, cfg.split_fraction)?;
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        let train = make_windows(&prepare(&tr_in, tr_t.as_ref())?, cfg.stride)?;
        let mut val = make_windows(&prepare(&va_in, va_t.as_ref())?, cfg.stride)?;
        let cut = tr_in.len();
        val.iter_mut().for_each(|w| w.origin += cut);
        if train.is_empty() || val.is_empty() {
            return Err(Error::Data("no usable training or validation windows".into()));
        }
        Ok(Self { train, val, cut })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub epoch: usize,
    pub train: LossReport,
    pub val: LossReport,
    pub wall_seconds: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Pc2daeModel,
    pub log: Vec<TrainLogRecord>,
    pub best_epoch: Option<usize>,
    pub wall_seconds: f64,
}

fn batch_report(
    model: &Pc2daeModel,
    batch: &WindowBatch,
    lw: &LossWeights,
    rng: Option<&mut rng::Rng64>,
    want_grads: bool,
) -> Result<(LossReport, Option<Vec<Vec<f64>>>)> {
    let mut tape = Tape::new();
    let b = model.params.bind(&mut tape);
    let x = tape.constant(batch.inputs.clone());
    let e = tape.constant(batch.env.clone());
    let targets = split_families(&batch.targets).map(|_, t| tape.constant(t.clone()));
    let weights = split_families(&batch.weights).map(|_, t| tape.constant(t.clone()));
    let preds = model.forward(&mut tape, &b, x, e, rng)?;
    let (loss, report) = total_loss(&mut tape, &preds, &targets, &weights, lw)?;
    if !want_grads {
        return Ok((report, None));
    }
    tape.backward(loss)?;
    let grads: Vec<Vec<f64>> = b.vars().iter().map(|&v| tape.grad_tensor(v).into_data()).collect();
    if !report.total.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
        let bad = model
            .params
            .names()
            .iter()
            .zip(&grads)
            .find(|(_, g)| g.iter().any(|v| !v.is_finite()))
            .map(|(n, _)| n.as_str());
        return Err(Error::Numerical(match bad {
            Some(n) => format!("non-finite gradient for parameter {n} (loss {})", report.total),
            None => format!("non-finite loss {}", report.total),
        }));
    }
    Ok((report, Some(grads)))
}

/// Mean loss over `windows` in evaluation mode.
pub fn evaluate_loss(model: &Pc2daeModel, windows: &[Window], batch_size: usize, lw: &LossWeights) -> Result<LossReport> {
    let mut parts = Vec::new();
    for chunk in windows.chunks(batch_size.max(1)) {
        let batch = WindowBatch::from_windows(chunk);
        let (r, _) = batch_report(model, &batch, lw, None, false)?;
        parts.push((r, chunk.len() as f64));
    }
    Ok(LossReport::weighted_mean(&parts))
}

fn check_tripwire(model: &Pc2daeModel, r: &LossReport, epoch: usize) -> Result<()> {
    if model.config.constrained && r.positivity.iter().any(|(_, &v)| v != 0.0) {
        return Err(Error::Numerical(format!("constrained model produced a nonzero positivity penalty at epoch {epoch}")));
    }
    Ok(())
}

pub fn train(model: &Pc2daeModel, data: &TrainData, cfg: &TrainConfig, lw: &LossWeights) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = None;
    let mut log = Vec::new();
    let mut opt = Adam::new(current.params.values(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps);
    let mut shuffle_rng = rng::stream(cfg.seed, "train.shuffle");
    let mut dropout_rng = rng::stream(cfg.seed, "train.dropout");
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut stale_epochs = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut parts = Vec::new();
        for chunk in order.chunks(cfg.batch_size) {
            let batch = WindowBatch::from_windows(chunk.iter().map(|&i| &data.train[i]));
            let (report, grads) = batch_report(&current, &batch, lw, Some(&mut dropout_rng), true)?;
            let mut grads = grads.expect("gradients requested");
            clip_global_norm(&mut grads, cfg.grad_clip_norm);
            opt.update(current.params.values_mut(), &grads);
            parts.push((report, chunk.len() as f64));
        }
        let train_report = LossReport::weighted_mean(&parts);
        let val_report = evaluate_loss(&current, &data.val, cfg.batch_size, lw)?;
        check_tripwire(&current, &train_report, epoch)?;
        check_tripwire(&current, &val_report, epoch)?;
        if !val_report.total.is_finite() {
            return Err(Error::Numerical(format!("validation loss is {} at epoch {epoch}", val_report.total)));
        }
        let record = TrainLogRecord {
            epoch,
            train: train_report,
            val: val_report,
            wall_seconds: start.elapsed().as_secs_f64(),
            learning_rate: cfg.learning_rate,
        };
        log::info!(
            "epoch {epoch}: train {:.5} val {:.5} (recon {:.5}) {:.1}s",
            train_report.total,
            val_report.total,
            val_report.recon_total(),
            record.wall_seconds
        );
        log.push(record);
        if val_report.total < best_loss {
            best_loss = val_report.total;
            best = current.clone();
            best_epoch = Some(epoch);
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.early_stop_patience {
                log::info!("early stop after epoch {epoch}; best epoch {best_epoch:?}");
                break;
            }
        }
    }
    Ok(TrainOutcome { model: best, log, best_epoch, wall_seconds: start.elapsed().as_secs_f64() })
}

pub fn write_log(log: &[TrainLogRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in log {
        serde_json::to_writer(&mut f, r).map_err(|e| Error::Format(e.to_string()))?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}
