//! Periodic orthogonal discrete wavelet transform with soft thresholding.

use crate::error::{Error, Result};

/// Daubechies 4 (8 taps) reconstruction low-pass filter.
pub const DB4: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

fn highpass(h: &[f64]) -> Vec<f64> {
    let l = h.len();
    (0..l).map(|n| if n % 2 == 0 { h[l - 1 - n] } else { -h[l - 1 - n] }).collect()
}

/// One analysis level on an even-length series (periodic extension).
pub fn dwt_step(x: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let g = highpass(h);
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        for (j, (&hj, &gj)) in h.iter().zip(&g).enumerate() {
            let v = x[(2 * k + j) % n];
            a[k] += hj * v;
            d[k] += gj * v;
        }
    }
    (a, d)
}

/// Inverse of [`dwt_step`].
pub fn idwt_step(a: &[f64], d: &[f64], h: &[f64]) -> Vec<f64> {
    let n = 2 * a.len();
    let g = highpass(h);
    let mut x = vec![0.0; n];
    for k in 0..a.len() {
        for (j, (&hj, &gj)) in h.iter().zip(&g).enumerate() {
            x[(2 * k + j) % n] += hj * a[k] + gj * d[k];
        }
    }
    x
}

/// Detail coefficients finest first, then the final approximation.
pub fn wavedec(x: &[f64], h: &[f64], levels: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if !x.len().is_multiple_of(1 << levels) {
        return Err(Error::contract(format!("length {} is not a multiple of 2^{levels}", x.len())));
    }
    let mut a = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (na, d) = dwt_step(&a, h);
        details.push(d);
        a = na;
    }
    Ok((details, a))
}

pub fn waverec(details: &[Vec<f64>], approx: &[f64], h: &[f64]) -> Vec<f64> {
    let mut a = approx.to_vec();
    for d in details.iter().rev() {
        a = idwt_step(&a, d, h);
    }
    a
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Symmetric (half-sample) extension to `len` samples.
fn extend_symmetric(y: &[f64], len: usize) -> Vec<f64> {
    let n = y.len();
    (0..len)
        .map(|i| {
            let period = 2 * n;
            let j = i % period;
            if j < n {
                y[j]
            } else {
                y[period - 1 - j]
            }
        })
        .collect()
}

/// Universal soft-threshold denoising: the noise level comes from the
/// median absolute deviation of the finest details and the threshold is
/// `sigma * sqrt(2 ln n)`. Lengths that are not a multiple of `2^levels` are
/// symmetrically extended, then cropped back.
pub fn wavelet_denoise(y: &[f64], levels: usize) -> Result<Vec<f64>> {
    let n = y.len();
    let block = 1usize << levels;
    if levels == 0 || n < block {
        return Err(Error::contract(format!("wavelet denoising with {levels} levels needs at least {block} samples, got {n}")));
    }
    let padded_len = n.div_ceil(block) * block;
    let x = extend_symmetric(y, padded_len);
    let (mut details, approx) = wavedec(&x, &DB4, levels)?;
    let sigma = median(details[0].iter().map(|v| v.abs()).collect()) / 0.6745;
    let t = sigma * (2.0 * (n as f64).ln()).sqrt();
    for d in &mut details {
        d.iter_mut().for_each(|v| *v = soft_threshold(*v, t));
    }
    let mut out = waverec(&details, &approx, &DB4);
    out.truncate(n);
    Ok(out)
}
