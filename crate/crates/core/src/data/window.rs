//! Fixed-length windowing, missing-data repair and overlap-average stitching.

use crate::autodiff::Tensor;
use crate::channels::{N_ENV, N_TARGETS};
use crate::data::csv_io::fill_linear;
use crate::data::frame::SeriesFrame;
use crate::error::{Error, Result};

pub const WINDOW: usize = 128;
/// Gaps up to this many samples are treated as short.
pub const SHORT_GAP: usize = 5;

/// Gap-filled, channel-major series ready for windowing.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub inputs: Vec<Vec<f64>>,
    pub env: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// 0 where the input was stale or missing, else 1.
    pub weights: Vec<Vec<f64>>,
    /// True inside runs of more than [`SHORT_GAP`] missing samples.
    pub long_gap: Vec<Vec<bool>>,
}

impl Prepared {
    pub fn len(&self) -> usize {
        self.env.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fills missing samples by linear interpolation and derives loss weights.
/// Targets come from `target` (oracle mode) or from the input itself.
pub fn prepare(input: &SeriesFrame, target: Option<&SeriesFrame>) -> Result<Prepared> {
    if let Some(t) = target {
        if t.len() != input.len() {
            return Err(Error::Data(format!("target frame has {} rows, input has {}", t.len(), input.len())));
        }
    }
    let n = input.len();
    let mut inputs = input.targets.clone();
    let mut long_gap = vec![vec![false; n]; N_TARGETS];
    for c in 0..N_TARGETS {
        mark_long_gaps(&input.missing[c], &mut long_gap[c]);
        if inputs[c].iter().all(|v| v.is_nan()) {
            return Err(Error::Data(format!("channel {} has no observed samples", input.meta[c].name)));
        }
        fill_linear(&mut inputs[c]);
    }
    let targets = match target {
        Some(t) => {
            let mut v = t.targets.clone();
            v.iter_mut().for_each(|s| fill_linear(s));
            v
        }
        None => inputs.clone(),
    };
    let weights = (0..N_TARGETS)
        .map(|c| (0..n).map(|t| f64::from(u8::from(input.is_valid(c, t)))).collect())
        .collect();
    Ok(Prepared { inputs, env: input.env.clone(), targets, weights, long_gap })
}

fn mark_long_gaps(missing: &[bool], out: &mut [bool]) {
    let mut t = 0;
    while t < missing.len() {
        if missing[t] {
            let start = t;
            while t < missing.len() && missing[t] {
                t += 1;
            }
            if t - start > SHORT_GAP {
                out[start..t].fill(true);
            }
        } else {
            t += 1;
        }
    }
}

/// Origins `0, stride, 2 stride, ...` of every window that fits.
pub fn window_origins(len: usize, stride: usize) -> Result<Vec<usize>> {
    if stride == 0 {
        return Err(Error::config("window stride must be positive"));
    }
    if len < WINDOW {
        return Err(Error::Data(format!("series has {len} samples; at least {WINDOW} are needed for one window")));
    }
    Ok((0..=(len - WINDOW) / stride).map(|i| i * stride).collect())
}

/// Like [`window_origins`] plus a final window flush with the end so every
/// sample is covered.
pub fn inference_origins(len: usize, stride: usize) -> Result<Vec<usize>> {
    let mut o = window_origins(len, stride)?;
    if *o.last().unwrap() + WINDOW < len {
        o.push(len - WINDOW);
    }
    Ok(o)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub origin: usize,
    /// `[N_TARGETS][WINDOW]` flattened.
    pub input: Vec<f64>,
    pub env: Vec<f64>,
    pub target: Vec<f64>,
    pub weight: Vec<f64>,
}

fn cut(rows: &[Vec<f64>], origin: usize) -> Vec<f64> {
    rows.iter().flat_map(|r| r[origin..origin + WINDOW].iter().copied()).collect()
}

pub fn windows_at(p: &Prepared, origins: &[usize]) -> Vec<Window> {
    origins
        .iter()
        .map(|&o| Window {
            origin: o,
            input: cut(&p.inputs, o),
            env: cut(&p.env, o),
            target: cut(&p.targets, o),
            weight: cut(&p.weights, o),
        })
        .collect()
}

/// Training windows at `stride`. Windows lying entirely inside long gaps on
/// every channel are dropped.
pub fn make_windows(p: &Prepared, stride: usize) -> Result<Vec<Window>> {
    let origins: Vec<usize> = window_origins(p.len(), stride)?
        .into_iter()
        .filter(|&o| !p.long_gap.iter().all(|g| g[o..o + WINDOW].iter().all(|&b| b)))
        .collect();
    Ok(windows_at(p, &origins))
}

/// Stacked tensors for a set of windows.
#[derive(Debug, Clone)]
pub struct WindowBatch {
    pub inputs: Tensor,
    pub env: Tensor,
    pub targets: Tensor,
    pub weights: Tensor,
    pub origins: Vec<usize>,
}

impl WindowBatch {
    pub fn from_windows<'a>(windows: impl IntoIterator<Item = &'a Window>) -> Self {
        let (mut x, mut e, mut y, mut w, mut o) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for win in windows {
            x.extend_from_slice(&win.input);
            e.extend_from_slice(&win.env);
            y.extend_from_slice(&win.target);
            w.extend_from_slice(&win.weight);
            o.push(win.origin);
        }
        let b = o.len();
        let t = |data, c| Tensor::new(vec![b, c, WINDOW], data).expect("window sizes are fixed");
        Self { inputs: t(x, N_TARGETS), env: t(e, N_ENV), targets: t(y, N_TARGETS), weights: t(w, N_TARGETS), origins: o }
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }
}

/// Averages overlapping windows `[B, C, W]` back into `[C][total_len]`.
pub fn stitch(windows: &Tensor, origins: &[usize], total_len: usize) -> Result<Vec<Vec<f64>>> {
    let &[b, c, w] = windows.shape() else {
        return Err(Error::contract(format!("stitch expects [B, C, W], got {:?}", windows.shape())));
    };
    if b != origins.len() {
        return Err(Error::contract(format!("stitch: {b} windows but {} origins", origins.len())));
    }
    let mut sum = vec![vec![0.0; total_len]; c];
    let mut count = vec![0u32; total_len];
    let data = windows.data();
    for (i, &o) in origins.iter().enumerate() {
        if o + w > total_len {
            return Err(Error::contract(format!("window at {o} overruns length {total_len}")));
        }
        for ch in 0..c {
            let row = &data[(i * c + ch) * w..(i * c + ch + 1) * w];
            for (k, v) in row.iter().enumerate() {
                sum[ch][o + k] += v;
            }
        }
        count[o..o + w].iter_mut().for_each(|n| *n += 1);
    }
    if let Some(start) = count.iter().position(|&n| n == 0) {
        let end = count[start..].iter().position(|&n| n > 0).map_or(total_len, |k| start + k);
        return Err(Error::Data(format!("windows leave samples [{start}, {end}) uncovered")));
    }
    for row in &mut sum {
        for (v, &n) in row.iter_mut().zip(&count) {
            *v /= f64::from(n);
        }
    }
    Ok(sum)
}
