//! Group normalization over `[B, C, T]`: each (batch, group) slab of
//! `C / groups` channels and all time steps is standardized, then scaled and
//! shifted per channel.

#[derive(Debug, Clone)]
pub struct GroupNormSaved {
    pub normalized: Vec<f64>,
    /// `1 / sqrt(var + eps)` per (batch, group).
    pub inv_std: Vec<f64>,
}

pub fn group_norm_forward(
    shape: [usize; 3],
    groups: usize,
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    eps: f64,
) -> (Vec<f64>, GroupNormSaved) {
    let [batch, channels, steps] = shape;
    let cpg = channels / groups;
    let n = (cpg * steps) as f64;
    let mut normalized = vec![0.0; x.len()];
    let mut inv_std = vec![0.0; batch * groups];
    let mut out = vec![0.0; x.len()];
    for b in 0..batch {
        for g in 0..groups {
            let start = (b * channels + g * cpg) * steps;
            let slab = &x[start..start + cpg * steps];
            let mean = slab.iter().sum::<f64>() / n;
            let var = slab.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[b * groups + g] = inv;
            for (i, &v) in slab.iter().enumerate() {
                let c = g * cpg + i / steps;
                let xhat = (v - mean) * inv;
                normalized[start + i] = xhat;
                out[start + i] = gamma[c] * xhat + beta[c];
            }
        }
    }
    (out, GroupNormSaved { normalized, inv_std })
}

/// Accumulates gradients. With `detach_stats` the group mean and variance are
/// treated as constants, which restricts the input gradient to the same
/// (batch, channel, step) as the output gradient.
#[allow(clippy::too_many_arguments)]
pub fn group_norm_backward(
    shape: [usize; 3],
    groups: usize,
    saved: &GroupNormSaved,
    gamma: &[f64],
    grad_out: &[f64],
    detach_stats: bool,
    grad_x: Option<&mut [f64]>,
    grad_gamma: Option<&mut [f64]>,
    grad_beta: Option<&mut [f64]>,
) {
    let [batch, channels, steps] = shape;
    let cpg = channels / groups;
    let n = (cpg * steps) as f64;
    if let Some(dg) = grad_gamma {
        for (i, (&go, &xh)) in grad_out.iter().zip(&saved.normalized).enumerate() {
            dg[(i / steps) % channels] += go * xh;
        }
    }
    if let Some(db) = grad_beta {
        for (i, &go) in grad_out.iter().enumerate() {
            db[(i / steps) % channels] += go;
        }
    }
    let Some(dx) = grad_x else { return };
    for b in 0..batch {
        for g in 0..groups {
            let start = (b * channels + g * cpg) * steps;
            let len = cpg * steps;
            let inv = saved.inv_std[b * groups + g];
            let xhat = &saved.normalized[start..start + len];
            let go = &grad_out[start..start + len];
            let dxhat = |i: usize| go[i] * gamma[g * cpg + i / steps];
            if detach_stats {
                for i in 0..len {
                    dx[start + i] += inv * dxhat(i);
                }
                continue;
            }
            let mut sum = 0.0;
            let mut sum_xhat = 0.0;
            for i in 0..len {
                let d = dxhat(i);
                sum += d;
                sum_xhat += d * xhat[i];
            }
            for i in 0..len {
                dx[start + i] += inv / n * (n * dxhat(i) - sum - xhat[i] * sum_xhat);
            }
        }
    }
}
