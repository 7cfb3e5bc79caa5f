//! 1-D grouped, dilated cross-correlation kernels.
//!
//! Layouts: input `[B, C_in, T_in]`, weight `[C_out, C_in / groups, k]`,
//! output `[B, C_out, T_out]` with `T_out = T_in + 2 * padding - dilation * (k - 1)`.
//! The direct kernel is the reference; [`conv1d_forward_im2col`] must agree
//! with it bit for bit.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub t_in: usize,
    pub t_out: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub padding: usize,
    pub groups: usize,
}

impl ConvGeometry {
    pub fn new(
        input_shape: &[usize],
        weight_shape: &[usize],
        dilation: usize,
        padding: usize,
        groups: usize,
    ) -> Result<Self> {
        if input_shape.len() != 3 {
            return Err(Error::contract(format!("conv1d input must be rank 3, got shape {input_shape:?}")));
        }
        if weight_shape.len() != 3 {
            return Err(Error::contract(format!("conv1d weight must be rank 3, got shape {weight_shape:?}")));
        }
        if dilation == 0 || groups == 0 {
            return Err(Error::contract("conv1d dilation and groups must be positive"));
        }
        let (batch, c_in, t_in) = (input_shape[0], input_shape[1], input_shape[2]);
        let (c_out, cin_per_group, kernel) = (weight_shape[0], weight_shape[1], weight_shape[2]);
        if c_in % groups != 0 {
            return Err(Error::contract(format!("conv1d C_in={c_in} is not divisible by groups={groups}")));
        }
        if c_out % groups != 0 {
            return Err(Error::contract(format!("conv1d C_out={c_out} is not divisible by groups={groups}")));
        }
        if cin_per_group != c_in / groups {
            return Err(Error::contract(format!(
                "conv1d weight dim 1 is {cin_per_group} but C_in/groups = {}",
                c_in / groups
            )));
        }
        if kernel == 0 {
            return Err(Error::contract("conv1d kernel size (weight dim 2) must be positive"));
        }
        let span = dilation * (kernel - 1);
        if t_in + 2 * padding < span + 1 {
            return Err(Error::contract(format!(
                "conv1d input length T={t_in} with padding {padding} is shorter than the dilated kernel span {}",
                span + 1
            )));
        }
        let t_out = t_in + 2 * padding - span;
        Ok(Self { batch, c_in, c_out, t_in, t_out, kernel, dilation, padding, groups })
    }

    fn cin_per_group(&self) -> usize {
        self.c_in / self.groups
    }

    fn cout_per_group(&self) -> usize {
        self.c_out / self.groups
    }

    pub fn output_shape(&self) -> Vec<usize> {
        vec![self.batch, self.c_out, self.t_out]
    }

    /// Signed input offset of tap `kk` relative to output step `t`.
    fn offset(&self, kk: usize) -> isize {
        (kk * self.dilation) as isize - self.padding as isize
    }

    /// Output steps `t` for which `t + offset` lands inside the input.
    fn valid_range(&self, off: isize) -> (usize, usize) {
        let lo = if off < 0 { (-off) as usize } else { 0 };
        let hi_signed = self.t_in as isize - off;
        let hi = if hi_signed <= 0 { 0 } else { (hi_signed as usize).min(self.t_out) };
        (lo.min(hi), hi)
    }
}

pub fn conv1d_forward(g: &ConvGeometry, input: &[f64], weight: &[f64], bias: Option<&[f64]>) -> Vec<f64> {
    let (cinpg, coutpg) = (g.cin_per_group(), g.cout_per_group());
    let mut out = vec![0.0; g.batch * g.c_out * g.t_out];
    for b in 0..g.batch {
        for oc in 0..g.c_out {
            let group = oc / coutpg;
            let row = &mut out[(b * g.c_out + oc) * g.t_out..][..g.t_out];
            if let Some(bias) = bias {
                row.fill(bias[oc]);
            }
            for icg in 0..cinpg {
                let ic = group * cinpg + icg;
                let in_row = &input[(b * g.c_in + ic) * g.t_in..][..g.t_in];
                for kk in 0..g.kernel {
                    let w = weight[(oc * cinpg + icg) * g.kernel + kk];
                    let off = g.offset(kk);
                    let (lo, hi) = g.valid_range(off);
                    if lo >= hi {
                        continue;
                    }
                    let src = &in_row[(lo as isize + off) as usize..(hi as isize + off) as usize];
                    for (o, &x) in row[lo..hi].iter_mut().zip(src) {
                        *o += w * x;
                    }
                }
            }
        }
    }
    out
}

/// Same result as [`conv1d_forward`] computed through an explicit column
/// matrix. Out-of-range taps are skipped rather than multiplied by zero so
/// that the accumulation sequence matches the direct kernel exactly.
pub fn conv1d_forward_im2col(g: &ConvGeometry, input: &[f64], weight: &[f64], bias: Option<&[f64]>) -> Vec<f64> {
    let (cinpg, coutpg) = (g.cin_per_group(), g.cout_per_group());
    let rows = cinpg * g.kernel;
    let mut cols = vec![0.0; rows * g.t_out];
    let mut valid = vec![false; rows * g.t_out];
    let mut out = vec![0.0; g.batch * g.c_out * g.t_out];
    for b in 0..g.batch {
        for group in 0..g.groups {
            for icg in 0..cinpg {
                let ic = group * cinpg + icg;
                let in_row = &input[(b * g.c_in + ic) * g.t_in..][..g.t_in];
                for kk in 0..g.kernel {
                    let r = icg * g.kernel + kk;
                    let off = g.offset(kk);
                    for t in 0..g.t_out {
                        let src = t as isize + off;
                        let inside = src >= 0 && (src as usize) < g.t_in;
                        valid[r * g.t_out + t] = inside;
                        cols[r * g.t_out + t] = if inside { in_row[src as usize] } else { 0.0 };
                    }
                }
            }
            for ocg in 0..coutpg {
                let oc = group * coutpg + ocg;
                let w_row = &weight[oc * rows..][..rows];
                let o_row = &mut out[(b * g.c_out + oc) * g.t_out..][..g.t_out];
                if let Some(bias) = bias {
                    o_row.fill(bias[oc]);
                }
                for (r, &w) in w_row.iter().enumerate() {
                    let c_row = &cols[r * g.t_out..][..g.t_out];
                    let v_row = &valid[r * g.t_out..][..g.t_out];
                    for t in 0..g.t_out {
                        if v_row[t] {
                            o_row[t] += w * c_row[t];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates gradients of a convolution into whichever buffers are given.
pub fn conv1d_backward(
    g: &ConvGeometry,
    input: &[f64],
    weight: &[f64],
    grad_out: &[f64],
    mut grad_input: Option<&mut [f64]>,
    mut grad_weight: Option<&mut [f64]>,
    grad_bias: Option<&mut [f64]>,
) {
    let (cinpg, coutpg) = (g.cin_per_group(), g.cout_per_group());
    if let Some(db) = grad_bias {
        for b in 0..g.batch {
            for oc in 0..g.c_out {
                db[oc] += grad_out[(b * g.c_out + oc) * g.t_out..][..g.t_out].iter().sum::<f64>();
            }
        }
    }
    for b in 0..g.batch {
        for oc in 0..g.c_out {
            let group = oc / coutpg;
            let go = &grad_out[(b * g.c_out + oc) * g.t_out..][..g.t_out];
            for icg in 0..cinpg {
                let ic = group * cinpg + icg;
                let in_base = (b * g.c_in + ic) * g.t_in;
                for kk in 0..g.kernel {
                    let widx = (oc * cinpg + icg) * g.kernel + kk;
                    let off = g.offset(kk);
                    let (lo, hi) = g.valid_range(off);
                    if lo >= hi {
                        continue;
                    }
                    let s_lo = (in_base as isize + lo as isize + off) as usize;
                    let s_hi = (in_base as isize + hi as isize + off) as usize;
                    if let Some(dw) = grad_weight.as_deref_mut() {
                        let src = &input[s_lo..s_hi];
                        dw[widx] += go[lo..hi].iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                    }
                    if let Some(di) = grad_input.as_deref_mut() {
                        let w = weight[widx];
                        for (d, &gv) in di[s_lo..s_hi].iter_mut().zip(&go[lo..hi]) {
                            *d += w * gv;
                        }
                    }
                }
            }
        }
    }
}
