//! Gradient-mask receptive-field measurement.

use crate::autodiff::{Tape, Tensor};
use crate::channels::N_TARGETS;
use crate::error::Result;
use crate::model::network::Pc2daeModel;

/// Span of input time steps that influence trunk output step `t0`, found as
/// the extent of nonzero input gradients. Normalization statistics are
/// detached so their window-wide coupling does not count.
pub fn trunk_receptive_field(model: &Pc2daeModel, len: usize, t0: usize) -> Result<(usize, usize)> {
    let mut tape = Tape::new().with_detached_norm_stats();
    let b = model.params.bind(&mut tape);
    let x = tape.param(Tensor::from_fn(&[1, N_TARGETS, len], |i| ((i * 7919) % 101) as f64 / 50.0 - 1.0));
    let h = model.trunk(&mut tape, &b, x, None)?;
    let step = tape.slice_last(h, t0, t0 + 1)?;
    let root = tape.sum(step);
    tape.backward(root)?;
    let g = tape.grad_tensor(x);
    let hit: Vec<usize> = (0..len)
        .filter(|&t| (0..N_TARGETS).any(|c| g.at3(0, c, t) != 0.0))
        .collect();
    Ok((*hit.first().unwrap_or(&t0), *hit.last().unwrap_or(&t0)))
}
