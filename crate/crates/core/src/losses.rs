//! Masked reconstruction loss plus positivity and smoothness penalties.
//!
//! Penalties are means over (batch, channel, time), so their weights do not
//! depend on batch size or window length.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::channels::{Family, PerFamily};
use crate::error::{Error, Result};
use crate::model::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub positivity: PerFamily<f64>,
    pub smooth: PerFamily<f64>,
}

impl LossWeights {
    pub fn uniform(positivity: f64, smooth: f64) -> Self {
        Self { positivity: PerFamily::from_fn(|_| positivity), smooth: PerFamily::from_fn(|_| smooth) }
    }

    pub fn for_variant(v: Variant) -> Self {
        match v {
            Variant::Lean => Self::uniform(0.1, 0.01),
            Variant::Wide => Self::uniform(0.01, 0.005),
            Variant::Ablation => Self::uniform(0.0, 0.0),
        }
    }
}

/// `sum(|pred - target| * w) / sum(w)`. A family with no weight contributes 0.
pub fn recon_loss(tape: &mut Tape, pred: Var, target: Var, weights: Var) -> Result<Var> {
    let total_w: f64 = tape.value(weights).data().iter().sum();
    if total_w == 0.0 {
        log::warn!("reconstruction weights are all zero; term contributes 0");
        return Ok(tape.constant(Tensor::scalar(0.0)));
    }
    let d = tape.sub(pred, target)?;
    let a = tape.abs(d);
    let m = tape.mul(a, weights)?;
    let s = tape.sum(m);
    Ok(tape.scale(s, 1.0 / total_w))
}

/// `lambda * mean(relu(-pred))`.
pub fn positivity_loss(tape: &mut Tape, pred: Var, lambda: f64) -> Var {
    let neg = tape.scale(pred, -1.0);
    let r = tape.relu(neg);
    let m = tape.mean(r);
    tape.scale(m, lambda)
}

/// `lambda * mean |pred[t+1] - pred[t]|` over the last axis.
pub fn smooth_loss(tape: &mut Tape, pred: Var, lambda: f64) -> Result<Var> {
    let t = *tape.shape(pred).last().unwrap_or(&0);
    if t < 2 {
        return Err(Error::contract("smooth_loss needs at least 2 time steps"));
    }
    let a = tape.slice_last(pred, 1, t)?;
    let b = tape.slice_last(pred, 0, t - 1)?;
    let d = tape.sub(a, b)?;
    let d = tape.abs(d);
    let m = tape.mean(d);
    Ok(tape.scale(m, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub recon: PerFamily<f64>,
    pub positivity: PerFamily<f64>,
    pub smooth: PerFamily<f64>,
    pub total: f64,
}

impl LossReport {
    pub fn recon_total(&self) -> f64 {
        self.recon.bc + self.recon.gas + self.recon.co2
    }

    pub fn component_sum(&self) -> f64 {
        Family::ALL
            .iter()
            .map(|&f| self.recon.get(f) + self.positivity.get(f) + self.smooth.get(f))
            .sum()
    }

    /// Weighted average of several reports.
    pub fn weighted_mean(reports: &[(LossReport, f64)]) -> LossReport {
        let w: f64 = reports.iter().map(|(_, w)| w).sum();
        let mut out = LossReport::default();
        if w == 0.0 {
            return out;
        }
        for (r, rw) in reports {
            let k = rw / w;
            for f in Family::ALL {
                *out.recon.get_mut(f) += k * r.recon.get(f);
                *out.positivity.get_mut(f) += k * r.positivity.get(f);
                *out.smooth.get_mut(f) += k * r.smooth.get(f);
            }
            out.total += k * r.total;
        }
        out
    }
}

/// Total loss and its per-family components. The returned variable is the
/// differentiable total.
pub fn total_loss(
    tape: &mut Tape,
    preds: &PerFamily<Var>,
    targets: &PerFamily<Var>,
    weights: &PerFamily<Var>,
    lw: &LossWeights,
) -> Result<(Var, LossReport)> {
    let mut report = LossReport::default();
    let mut terms = Vec::with_capacity(9);
    for f in Family::ALL {
        let pred = *preds.get(f);
        let r = recon_loss(tape, pred, *targets.get(f), *weights.get(f))?;
        let p = positivity_loss(tape, pred, *lw.positivity.get(f));
        let s = smooth_loss(tape, pred, *lw.smooth.get(f))?;
        *report.recon.get_mut(f) = tape.value(r).item();
        *report.positivity.get_mut(f) = tape.value(p).item();
        *report.smooth.get_mut(f) = tape.value(s).item();
        terms.extend([r, p, s]);
    }
    let mut total = terms[0];
    for &t in &terms[1..] {
        total = tape.add(total, t)?;
    }
    report.total = tape.value(total).item();
    Ok((total, report))
}
