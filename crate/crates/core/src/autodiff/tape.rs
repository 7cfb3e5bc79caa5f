//! Define-by-run reverse-mode tape.
//!
//! Every operation appends a node whose parents already exist on the tape, so
//! node order is a topological order and [`Tape::backward`] is a single
//! reverse sweep.

use rand::Rng;

use super::conv::{self, ConvGeometry};
use super::norm::{self, GroupNormSaved};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng64;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Values below this are raised to it so softplus stays strictly positive
/// even where `exp(beta * x)` underflows.
pub const SOFTPLUS_FLOOR: f64 = 1e-300;

#[derive(Debug)]
enum Op {
    Leaf,
    Conv1d { input: Var, weight: Var, bias: Option<Var>, geom: ConvGeometry },
    Add(Var, Var, Option<Vec<usize>>),
    Sub(Var, Var, Option<Vec<usize>>),
    Mul(Var, Var, Option<Vec<usize>>),
    Scale(Var, f64),
    AddScalar(Var),
    Elu(Var),
    Softplus(Var, f64),
    Sigmoid(Var),
    Relu(Var),
    Abs(Var),
    Sum(Var),
    Mean(Var),
    MeanLast(Var),
    Softmax { x: Var, outer: usize, n: usize, inner: usize },
    GroupNorm { x: Var, gamma: Var, beta: Var, groups: usize, saved: GroupNormSaved },
    Dropout(Var, Vec<f64>),
    PadReplicate { x: Var, left: usize, right: usize },
    SliceLast { x: Var, start: usize },
    Reshape(Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Conv1d { .. } => "conv1d",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Elu(..) => "elu",
            Op::Softplus(..) => "softplus",
            Op::Sigmoid(..) => "sigmoid",
            Op::Relu(..) => "relu",
            Op::Abs(..) => "abs",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::MeanLast(..) => "mean_last",
            Op::Softmax { .. } => "softmax",
            Op::GroupNorm { .. } => "group_norm",
            Op::Dropout(..) => "dropout",
            Op::PadReplicate { .. } => "pad_replicate",
            Op::SliceLast { .. } => "slice_last",
            Op::Reshape(..) => "reshape",
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Recording of one forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    check_finite: bool,
    first_nonfinite: Option<String>,
    detach_norm_stats: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the first operation that produces a non-finite value.
    pub fn with_finite_checks(mut self) -> Self {
        self.check_finite = true;
        self
    }

    /// Treat group-norm statistics as constants during backward. Used by the
    /// receptive-field probe; never during training.
    pub fn with_detached_norm_stats(mut self) -> Self {
        self.detach_norm_stats = true;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Gradient of the last backward root with respect to `v`, if any flowed.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    /// Gradient as a tensor shaped like `v`; zeros when `v` was disconnected.
    pub fn grad_tensor(&self, v: Var) -> Tensor {
        let shape = self.shape(v).to_vec();
        match self.grad(v) {
            Some(g) => Tensor::new(shape, g.to_vec()).expect("grad shape"),
            None => Tensor::zeros(&shape),
        }
    }

    /// Name of the first op that produced a non-finite value, when finite
    /// checks are enabled.
    pub fn first_nonfinite(&self) -> Option<&str> {
        self.first_nonfinite.as_deref()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match &self.first_nonfinite {
            Some(what) => Err(Error::Numerical(format!("non-finite value produced by {what}"))),
            None => Ok(()),
        }
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        if self.check_finite && self.first_nonfinite.is_none() && !value.all_finite() {
            self.first_nonfinite = Some(format!("{} (node {})", op.name(), self.nodes.len()));
        }
        self.nodes.push(Node { value, op, requires_grad });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn unary(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let value = self.value(x).map(f);
        self.push(value, op, &[x])
    }

    pub fn conv1d(&mut self, input: Var, weight: Var, bias: Option<Var>, dilation: usize, padding: usize, groups: usize) -> Result<Var> {
        let geom = ConvGeometry::new(self.shape(input), self.shape(weight), dilation, padding, groups)?;
        if let Some(b) = bias {
            if self.shape(b) != [geom.c_out] {
                return Err(Error::contract(format!(
                    "conv1d bias shape {:?} does not match C_out={}",
                    self.shape(b),
                    geom.c_out
                )));
            }
        }
        let out = conv::conv1d_forward(
            &geom,
            self.value(input).data(),
            self.value(weight).data(),
            bias.map(|b| self.value(b).data()),
        );
        let value = Tensor::new(geom.output_shape(), out)?;
        let mut parents = vec![input, weight];
        parents.extend(bias);
        Ok(self.push(value, Op::Conv1d { input, weight, bias, geom }, &parents))
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<(Tensor, Option<Vec<usize>>)> {
        let map = broadcast_map(self.shape(a), self.shape(b))?;
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let data: Vec<f64> = match &map {
            None => av.iter().zip(bv).map(|(&x, &y)| f(x, y)).collect(),
            Some(m) => av.iter().zip(m).map(|(&x, &j)| f(x, bv[j])).collect(),
        };
        Ok((Tensor::new(self.shape(a).to_vec(), data)?, map))
    }

    /// `a + b`, where `b` may broadcast along axes of size 1.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (value, map) = self.binary(a, b, |x, y| x + y)?;
        Ok(self.push(value, Op::Add(a, b, map), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (value, map) = self.binary(a, b, |x, y| x - y)?;
        Ok(self.push(value, Op::Sub(a, b, map), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (value, map) = self.binary(a, b, |x, y| x * y)?;
        Ok(self.push(value, Op::Mul(a, b, map), &[a, b]))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, Op::Scale(x, c), |v| v * c)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, Op::AddScalar(x), |v| v + c)
    }

    pub fn elu(&mut self, x: Var) -> Var {
        self.unary(x, Op::Elu(x), |v| if v > 0.0 { v } else { v.exp_m1() })
    }

    /// `(1/beta) * ln(1 + exp(beta * x))`, overflow-safe and strictly positive.
    pub fn softplus(&mut self, x: Var, beta: f64) -> Result<Var> {
        if !(beta > 0.0) {
            return Err(Error::contract(format!("softplus beta must be > 0, got {beta}")));
        }
        Ok(self.unary(x, Op::Softplus(x, beta), |v| softplus(v, beta)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, Op::Relu(x), |v| v.max(0.0))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        self.unary(x, Op::Abs(x), f64::abs)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let m = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Tensor::scalar(m), Op::Mean(x), &[x])
    }

    /// Mean over the last axis, keeping it with size 1.
    pub fn mean_last(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        let Some(&n) = t.shape().last() else {
            return Err(Error::contract("mean_last needs rank >= 1"));
        };
        if n == 0 {
            return Err(Error::contract("mean_last over an empty axis"));
        }
        let data: Vec<f64> = t.data().chunks(n).map(|c| c.iter().sum::<f64>() / n as f64).collect();
        let mut shape = t.shape().to_vec();
        *shape.last_mut().unwrap() = 1;
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::MeanLast(x), &[x]))
    }

    /// Max-subtracted softmax along `axis`.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let t = self.value(x);
        let shape = t.shape();
        if axis >= shape.len() {
            return Err(Error::contract(format!("softmax axis {axis} out of range for shape {shape:?}")));
        }
        let outer: usize = shape[..axis].iter().product();
        let n = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let src = t.data();
        let mut out = vec![0.0; src.len()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |j: usize| (o * n + j) * inner + i;
                let max = (0..n).map(|j| src[idx(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for j in 0..n {
                    let e = (src[idx(j)] - max).exp();
                    out[idx(j)] = e;
                    total += e;
                }
                for j in 0..n {
                    out[idx(j)] /= total;
                }
            }
        }
        let value = Tensor::new(shape.to_vec(), out)?;
        Ok(self.push(value, Op::Softmax { x, outer, n, inner }, &[x]))
    }

    pub fn group_norm(&mut self, x: Var, groups: usize, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let shape = self.shape(x);
        if shape.len() != 3 {
            return Err(Error::contract(format!("group_norm input must be [B, C, T], got {shape:?}")));
        }
        let dims = [shape[0], shape[1], shape[2]];
        if groups == 0 || !dims[1].is_multiple_of(groups) {
            return Err(Error::config(format!(
                "group_norm: {groups} groups do not divide {} channels",
                dims[1]
            )));
        }
        for (name, p) in [("gamma", gamma), ("beta", beta)] {
            if self.shape(p) != [dims[1]] {
                return Err(Error::contract(format!(
                    "group_norm {name} shape {:?} does not match C={}",
                    self.shape(p),
                    dims[1]
                )));
            }
        }
        let (out, saved) = norm::group_norm_forward(
            dims,
            groups,
            self.value(x).data(),
            self.value(gamma).data(),
            self.value(beta).data(),
            eps,
        );
        let value = Tensor::new(dims.to_vec(), out)?;
        Ok(self.push(value, Op::GroupNorm { x, gamma, beta, groups, saved }, &[x, gamma, beta]))
    }

    /// Inverted dropout. With `rng = None` (evaluation) or `p = 0` this is the
    /// identity and records nothing.
    pub fn dropout(&mut self, x: Var, p: f64, rng: Option<&mut Rng64>) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::contract(format!("dropout p must be in [0, 1), got {p}")));
        }
        let Some(rng) = rng else { return Ok(x) };
        if p == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let t = self.value(x);
        let data = t.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let value = Tensor::new(t.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Dropout(x, mask), &[x]))
    }

    /// Pads the last axis by repeating its edge values.
    pub fn pad_replicate(&mut self, x: Var, left: usize, right: usize) -> Result<Var> {
        let t = self.value(x);
        let Some(&n) = t.shape().last() else {
            return Err(Error::contract("pad_replicate needs rank >= 1"));
        };
        if n == 0 {
            return Err(Error::contract("pad_replicate of an empty axis"));
        }
        let m = n + left + right;
        let mut data = Vec::with_capacity(t.len() / n * m);
        for row in t.data().chunks(n) {
            data.extend(std::iter::repeat_n(row[0], left));
            data.extend_from_slice(row);
            data.extend(std::iter::repeat_n(row[n - 1], right));
        }
        let mut shape = t.shape().to_vec();
        *shape.last_mut().unwrap() = m;
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::PadReplicate { x, left, right }, &[x]))
    }

    /// Elements `start..end` of the last axis.
    pub fn slice_last(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let t = self.value(x);
        let Some(&n) = t.shape().last() else {
            return Err(Error::contract("slice_last needs rank >= 1"));
        };
        if start > end || end > n {
            return Err(Error::contract(format!("slice {start}..{end} out of range for last axis of length {n}")));
        }
        let data: Vec<f64> = t.data().chunks(n).flat_map(|row| row[start..end].iter().copied()).collect();
        let mut shape = t.shape().to_vec();
        *shape.last_mut().unwrap() = end - start;
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::SliceLast { x, start }, &[x]))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.value(x).clone().reshaped(shape)?;
        Ok(self.push(value, Op::Reshape(x), &[x]))
    }

    /// Reverse sweep from a one-element `root`, replacing any previous grads.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if self.value(root).len() != 1 {
            return Err(Error::contract(format!(
                "backward root must be a scalar, got shape {:?}",
                self.shape(root)
            )));
        }
        self.grads.iter_mut().for_each(|g| *g = None);
        self.grads[root.0] = Some(vec![1.0]);
        for i in (0..=root.0).rev() {
            let Some(g) = self.grads[i].take() else { continue };
            if self.nodes[i].requires_grad {
                self.propagate(i, &g);
            }
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn propagate(&mut self, i: usize, g: &[f64]) {
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        let out = &nodes[i].value;
        // Adds into the gradient buffer of `v`, creating it on first touch.
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !nodes[v.0].requires_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; nodes[v.0].value.len()]);
            f(slot);
        };
        let val = |v: Var| nodes[v.0].value.data();
        match &nodes[i].op {
            Op::Leaf => {}
            Op::Conv1d { input, weight, bias, geom } => {
                let (x, w) = (val(*input), val(*weight));
                acc(*input, &mut |d| conv::conv1d_backward(geom, x, w, g, Some(d), None, None));
                acc(*weight, &mut |d| conv::conv1d_backward(geom, x, w, g, None, Some(d), None));
                if let Some(b) = bias {
                    acc(*b, &mut |d| conv::conv1d_backward(geom, x, w, g, None, None, Some(d)));
                }
            }
            Op::Add(a, b, map) => {
                acc(*a, &mut |d| add_into(d, g));
                acc(*b, &mut |d| reduce_into(d, g, map.as_deref(), |gi, _| gi));
            }
            Op::Sub(a, b, map) => {
                acc(*a, &mut |d| add_into(d, g));
                acc(*b, &mut |d| reduce_into(d, g, map.as_deref(), |gi, _| -gi));
            }
            Op::Mul(a, b, map) => {
                let (av, bv) = (val(*a), val(*b));
                acc(*a, &mut |d| match map {
                    None => d.iter_mut().zip(g).zip(bv).for_each(|((d, gi), bi)| *d += gi * bi),
                    Some(m) => d.iter_mut().zip(g).zip(m).for_each(|((d, gi), &j)| *d += gi * bv[j]),
                });
                acc(*b, &mut |d| reduce_into(d, g, map.as_deref(), |gi, k| gi * av[k]));
            }
            Op::Scale(x, c) => acc(*x, &mut |d| d.iter_mut().zip(g).for_each(|(d, gi)| *d += gi * c)),
            Op::AddScalar(x) => acc(*x, &mut |d| add_into(d, g)),
            Op::Elu(x) => {
                let y = out.data();
                acc(*x, &mut |d| {
                    for ((d, gi), (&xi, &yi)) in d.iter_mut().zip(g).zip(val(*x).iter().zip(y)) {
                        *d += gi * if xi > 0.0 { 1.0 } else { yi + 1.0 };
                    }
                })
            }
            Op::Softplus(x, beta) => acc(*x, &mut |d| {
                for ((d, gi), &xi) in d.iter_mut().zip(g).zip(val(*x)) {
                    *d += gi * sigmoid(beta * xi);
                }
            }),
            Op::Sigmoid(x) => acc(*x, &mut |d| {
                for ((d, gi), &yi) in d.iter_mut().zip(g).zip(out.data()) {
                    *d += gi * yi * (1.0 - yi);
                }
            }),
            Op::Relu(x) => acc(*x, &mut |d| {
                for ((d, gi), &xi) in d.iter_mut().zip(g).zip(val(*x)) {
                    if xi > 0.0 {
                        *d += gi;
                    }
                }
            }),
            Op::Abs(x) => acc(*x, &mut |d| {
                for ((d, gi), &xi) in d.iter_mut().zip(g).zip(val(*x)) {
                    *d += gi * sign(xi);
                }
            }),
            Op::Sum(x) => acc(*x, &mut |d| d.iter_mut().for_each(|d| *d += g[0])),
            Op::Mean(x) => {
                let n = nodes[x.0].value.len() as f64;
                acc(*x, &mut |d| d.iter_mut().for_each(|d| *d += g[0] / n))
            }
            Op::MeanLast(x) => {
                let n = *nodes[x.0].value.shape().last().unwrap();
                acc(*x, &mut |d| {
                    for (row, gi) in d.chunks_mut(n).zip(g) {
                        row.iter_mut().for_each(|d| *d += gi / n as f64);
                    }
                })
            }
            Op::Softmax { x, outer, n, inner } => {
                let y = out.data();
                acc(*x, &mut |d| {
                    for o in 0..*outer {
                        for k in 0..*inner {
                            let idx = |j: usize| (o * n + j) * inner + k;
                            let dot: f64 = (0..*n).map(|j| g[idx(j)] * y[idx(j)]).sum();
                            for j in 0..*n {
                                d[idx(j)] += y[idx(j)] * (g[idx(j)] - dot);
                            }
                        }
                    }
                })
            }
            Op::GroupNorm { x, gamma, beta, groups, saved } => {
                let s = nodes[x.0].value.shape();
                let dims = [s[0], s[1], s[2]];
                let gm = val(*gamma);
                let detach = self.detach_norm_stats;
                acc(*x, &mut |d| norm::group_norm_backward(dims, *groups, saved, gm, g, detach, Some(d), None, None));
                acc(*gamma, &mut |d| norm::group_norm_backward(dims, *groups, saved, gm, g, detach, None, Some(d), None));
                acc(*beta, &mut |d| norm::group_norm_backward(dims, *groups, saved, gm, g, detach, None, None, Some(d)));
            }
            Op::Dropout(x, mask) => acc(*x, &mut |d| {
                for ((d, gi), m) in d.iter_mut().zip(g).zip(mask) {
                    *d += gi * m;
                }
            }),
            Op::PadReplicate { x, left, right } => {
                let n = *nodes[x.0].value.shape().last().unwrap();
                let m = n + left + right;
                acc(*x, &mut |d| {
                    for (row, grow) in d.chunks_mut(n).zip(g.chunks(m)) {
                        row[0] += grow[..*left].iter().sum::<f64>();
                        add_into(row, &grow[*left..*left + n]);
                        row[n - 1] += grow[left + n..].iter().sum::<f64>();
                    }
                })
            }
            Op::SliceLast { x, start } => {
                let n = *nodes[x.0].value.shape().last().unwrap();
                let m = *out.shape().last().unwrap();
                acc(*x, &mut |d| {
                    for (row, grow) in d.chunks_mut(n).zip(g.chunks(m.max(1))) {
                        add_into(&mut row[*start..start + m], &grow[..m]);
                    }
                })
            }
            Op::Reshape(x) => acc(*x, &mut |d| add_into(d, g)),
        }
    }
}

fn add_into(d: &mut [f64], g: &[f64]) {
    d.iter_mut().zip(g).for_each(|(d, g)| *d += g);
}

/// Accumulates `f(g[k], k)` into the (possibly broadcast) operand gradient.
fn reduce_into(d: &mut [f64], g: &[f64], map: Option<&[usize]>, f: impl Fn(f64, usize) -> f64) {
    match map {
        None => d.iter_mut().zip(g).enumerate().for_each(|(k, (d, &gi))| *d += f(gi, k)),
        Some(m) => {
            for (k, (&gi, &j)) in g.iter().zip(m).enumerate() {
                d[j] += f(gi, k);
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64, beta: f64) -> f64 {
    let z = beta * x;
    let v = (z.max(0.0) + (-z.abs()).exp().ln_1p()) / beta;
    v.max(SOFTPLUS_FLOOR)
}

/// For each element of a tensor shaped `a`, the flat index into a tensor
/// shaped `b` that broadcasts to it. `None` when the shapes are equal.
fn broadcast_map(a: &[usize], b: &[usize]) -> Result<Option<Vec<usize>>> {
    if a == b {
        return Ok(None);
    }
    if a.len() != b.len() {
        return Err(Error::contract(format!("operand shapes {a:?} and {b:?} differ in rank")));
    }
    for (axis, (&da, &db)) in a.iter().zip(b).enumerate() {
        if da != db && db != 1 {
            return Err(Error::contract(format!(
                "operand shapes {a:?} and {b:?} mismatch in dimension {axis} ({da} vs {db})"
            )));
        }
    }
    let mut b_strides = vec![0usize; b.len()];
    let mut stride = 1;
    for axis in (0..b.len()).rev() {
        b_strides[axis] = if b[axis] == 1 { 0 } else { stride };
        stride *= b[axis];
    }
    let n: usize = a.iter().product();
    let mut map = Vec::with_capacity(n);
    let mut idx = vec![0usize; a.len()];
    for _ in 0..n {
        map.push(idx.iter().zip(&b_strides).map(|(i, s)| i * s).sum());
        for axis in (0..a.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < a[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    Ok(Some(map))
}
