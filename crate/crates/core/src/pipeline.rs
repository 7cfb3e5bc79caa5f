//! End-to-end helpers: simulate, fit, denoise.

use crate::data::window::{inference_origins, prepare, windows_at, WindowBatch};
use crate::data::{stitch, ScaleRecord, SeriesFrame};
use crate::error::Result;
use crate::losses::LossWeights;
use crate::model::{ModelConfig, Pc2daeModel};
use crate::sim::{corrupt, generate_clean, CorruptionConfig, PlumeScenario, ScenarioConfig};
use crate::train::{train, TrainConfig, TrainData, TrainMode, TrainOutcome};

/// Clean ground truth and its corrupted observation.
pub fn simulate(scenario: &ScenarioConfig, corruption: &CorruptionConfig, seed: u64) -> Result<(SeriesFrame, SeriesFrame)> {
    let clean = generate_clean(&PlumeScenario::synthetic(scenario, seed))?;
    let noisy = corrupt(&clean, corruption, seed)?;
    Ok((clean, noisy))
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub outcome: TrainOutcome,
    pub record: ScaleRecord,
}

/// Fits scales on `noisy`, normalizes both frames with them and trains a
/// fresh model.
pub fn fit(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    weights: &LossWeights,
    noisy: &SeriesFrame,
    clean: Option<&SeriesFrame>,
) -> Result<Fitted> {
    let record = ScaleRecord::fit(noisy)?;
    let inputs = record.apply(noisy);
    let targets = match train_cfg.mode {
        TrainMode::Oracle => clean.map(|c| record.apply(c)),
        TrainMode::Field => None,
    };
    let data = TrainData::new(&inputs, targets.as_ref(), train_cfg)?;
    let model = Pc2daeModel::new(model_cfg.clone())?;
    let outcome = train(&model, &data, train_cfg, weights)?;
    Ok(Fitted { outcome, record })
}

/// Windows the frame, runs the model in evaluation mode, averages the
/// overlapping outputs and returns physical-unit series with no flags set.
pub fn denoise(model: &Pc2daeModel, record: &ScaleRecord, noisy: &SeriesFrame, stride: usize, batch: usize) -> Result<SeriesFrame> {
    let normalized = record.apply(noisy);
    let p = prepare(&normalized, None)?;
    let origins = inference_origins(noisy.len(), stride)?;
    let windows = windows_at(&p, &origins);
    let mut outs = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(batch.max(1)) {
        let b = WindowBatch::from_windows(chunk);
        outs.push(model.predict(&b.inputs, &b.env)?);
    }
    let shape = [origins.len(), outs[0].shape()[1], outs[0].shape()[2]];
    let all = crate::autodiff::Tensor::new(shape.to_vec(), outs.into_iter().flat_map(|t| t.into_data()).collect())?;
    let stitched = stitch(&all, &origins, noisy.len())?;
    let mut out = normalized.clone();
    out.targets = stitched;
    out.env = noisy.env.clone();
    out.stale.iter_mut().for_each(|s| s.fill(false));
    out.missing.iter_mut().for_each(|m| m.fill(false));
    let mut phys = record.invert(&out);
    phys.env = noisy.env.clone();
    Ok(phys)
}
