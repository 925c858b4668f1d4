//! Reverse-mode differentiation over whole matrices.
//!
//! A [`Tape`] records every primitive applied during a forward pass. Leaves
//! are either constants (frozen weights, inputs) or trainable parameters;
//! only nodes that depend on a parameter carry a gradient. Constants borrow
//! their matrices, so binding a large frozen weight costs nothing.
//!
//! ```
//! use tsreprogram::numerics::{Matrix, Tape};
//!
//! let w = Matrix::from_vec(1, 2, vec![3.0, -1.0]).unwrap();
//! let x = Matrix::from_vec(1, 2, vec![2.0, 5.0]).unwrap();
//! let mut tape = Tape::new();
//! let wv = tape.param(&w);
//! let xv = tape.constant(&x);
//! let y = tape.matmul_t(xv, wv).unwrap(); // 1×1: 2·3 + 5·(−1) = 1
//! let loss = tape.mean_square(y).unwrap();
//! let grads = tape.backward(loss).unwrap();
//! // d(y²)/dw = 2·y·x
//! assert_eq!(grads.get(wv).unwrap().data(), &[4.0, 10.0]);
//! ```

use std::borrow::Cow;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

const GELU_C: f64 = 0.044_715;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug)]
enum Op {
    Constant,
    Param,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        normalized: Matrix,
        inv_std: Vec<f64>,
    },
    Gelu(Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    Reshape(Var),
    MeanSquare(Var),
}

struct Node<'a> {
    value: Cow<'a, Matrix>,
    op: Op,
    needs_grad: bool,
}

/// Ordered record of primitive applications.
#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`, if it depends on a parameter.
    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Matrix> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn needs_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Cow<'a, Matrix>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push_owned(&mut self, value: Matrix, op: Op, parents: &[Var]) -> Var {
        let needs = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.push(Cow::Owned(value), op, needs)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, m: &'a Matrix) -> Var {
        self.push(Cow::Borrowed(m), Op::Constant, false)
    }

    pub fn constant_owned(&mut self, m: Matrix) -> Var {
        self.push(Cow::Owned(m), Op::Constant, false)
    }

    /// A trainable leaf.
    pub fn param(&mut self, m: &'a Matrix) -> Var {
        self.push(Cow::Borrowed(m), Op::Param, true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push_owned(v, Op::MatMul(a, b), &[a, b]))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul_t(self.value(b))?;
        Ok(self.push_owned(v, Op::MatMulT(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push_owned(v, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push_owned(v, Op::Sub(a, b), &[a, b]))
    }

    /// Adds the `1 × n` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (am, bm) = (self.value(a), self.value(bias));
        if bm.rows() != 1 || bm.cols() != am.cols() {
            return Err(Error::shape(format!(
                "add_row: bias {}x{} for {}x{} input",
                bm.rows(),
                bm.cols(),
                am.rows(),
                am.cols()
            )));
        }
        let mut v = am.clone();
        let b = bm.row(0).to_vec();
        for r in 0..v.rows() {
            for (x, bb) in v.row_mut(r).iter_mut().zip(&b) {
                *x += bb;
            }
        }
        Ok(self.push_owned(v, Op::AddRow(a, bias), &[a, bias]))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).scale(c);
        self.push_owned(v, Op::Scale(a, c), &[a])
    }

    /// `a · scale + shift`, element-wise.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let scaled = self.scale(a, scale);
        if shift == 0.0 {
            return scaled;
        }
        let shape = self.value(a).shape();
        let c = self.constant_owned(Matrix::filled(shape.0, shape.1, shift));
        self.add(scaled, c).expect("shapes agree by construction")
    }

    /// Row-wise softmax.
    ///
    /// With `causal_offset = Some(p)`, row `r` may only see columns `c <= p + r`;
    /// masked entries are exactly zero.
    pub fn softmax_rows(&mut self, x: Var, causal_offset: Option<usize>) -> Result<Var> {
        let xm = self.value(x);
        if xm.cols() == 0 {
            return Err(Error::shape("softmax over zero columns"));
        }
        let mut out = Matrix::zeros(xm.rows(), xm.cols());
        for r in 0..xm.rows() {
            let visible = match causal_offset {
                Some(p) => (p + r + 1).min(xm.cols()),
                None => xm.cols(),
            };
            let row = &xm.row(r)[..visible];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let dst = &mut out.row_mut(r)[..visible];
            let mut total = 0.0;
            for (d, &s) in dst.iter_mut().zip(row) {
                *d = (s - max).exp();
                total += *d;
            }
            for d in dst.iter_mut() {
                *d /= total;
            }
        }
        Ok(self.push_owned(out, Op::Softmax(x), &[x]))
    }

    /// Per-row layer normalization with `1 × n` scale and shift rows.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let xm = self.value(x);
        let (g, b) = (self.value(gamma), self.value(beta));
        let n = xm.cols();
        if g.shape() != (1, n) || b.shape() != (1, n) {
            return Err(Error::shape("layer_norm: gamma/beta must be 1 x width"));
        }
        let mut normalized = Matrix::zeros(xm.rows(), n);
        let mut out = Matrix::zeros(xm.rows(), n);
        let mut inv_std = Vec::with_capacity(xm.rows());
        for r in 0..xm.rows() {
            let row = xm.row(r);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std.push(is);
            for c in 0..n {
                let h = (row[c] - mean) * is;
                normalized.set(r, c, h);
                out.set(r, c, h * g.get(0, c) + b.get(0, c));
            }
        }
        Ok(self.push_owned(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                normalized,
                inv_std,
            },
            &[x, gamma, beta],
        ))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|a| {
            let u = SQRT_2_OVER_PI * (a + GELU_C * a * a * a);
            0.5 * a * (1.0 + u.tanh())
        });
        self.push_owned(v, Op::Gelu(x), &[x])
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|p| self.value(*p)).collect();
        let v = Matrix::concat_rows(&mats)?;
        Ok(self.push_owned(v, Op::ConcatRows(parts.to_vec()), parts))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|p| self.value(*p)).collect();
        let v = Matrix::concat_cols(&mats)?;
        Ok(self.push_owned(v, Op::ConcatCols(parts.to_vec()), parts))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(x).slice_rows(start, len)?;
        Ok(self.push_owned(v, Op::SliceRows(x, start), &[x]))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(x).slice_cols(start, len)?;
        Ok(self.push_owned(v, Op::SliceCols(x, start), &[x]))
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var> {
        let v = self.value(x).reshape(rows, cols)?;
        Ok(self.push_owned(v, Op::Reshape(x), &[x]))
    }

    /// Mean of squared entries, as a `1 × 1` node.
    pub fn mean_square(&mut self, x: Var) -> Result<Var> {
        let xm = self.value(x);
        if xm.is_empty() {
            return Err(Error::shape("mean_square of an empty matrix"));
        }
        let v = xm.frobenius_sq() / xm.len() as f64;
        Ok(self.push_owned(Matrix::filled(1, 1, v), Op::MeanSquare(x), &[x]))
    }

    /// Mean squared error between two equally shaped nodes.
    pub fn mse(&mut self, prediction: Var, target: Var) -> Result<Var> {
        let d = self.sub(prediction, target)?;
        self.mean_square(d)
    }

    /// Reverse sweep from a scalar `1 × 1` node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::shape("backward requires a 1x1 loss"));
        }
        if !lv.is_finite() {
            return Err(Error::Numeric("non-finite loss".into()));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].needs_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Matrix>], v: Var, g: Matrix) -> Result<()> {
        if !self.nodes[v.0].needs_grad {
            return Ok(());
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => {
                *slot = Some(g);
                Ok(())
            }
        }
    }

    fn propagate(&self, node: &Node<'a>, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        match &node.op {
            Op::Constant | Op::Param => {}
            Op::MatMul(a, b) => {
                if self.needs_grad(*a) {
                    let ga = g.matmul_t(self.value(*b))?;
                    self.accumulate(grads, *a, ga)?;
                }
                if self.needs_grad(*b) {
                    let gb = self.value(*a).t_matmul(g)?;
                    self.accumulate(grads, *b, gb)?;
                }
            }
            Op::MatMulT(a, b) => {
                if self.needs_grad(*a) {
                    let ga = g.matmul(self.value(*b))?;
                    self.accumulate(grads, *a, ga)?;
                }
                if self.needs_grad(*b) {
                    let gb = g.t_matmul(self.value(*a))?;
                    self.accumulate(grads, *b, gb)?;
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone())?;
                self.accumulate(grads, *b, g.clone())?;
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone())?;
                self.accumulate(grads, *b, g.scale(-1.0))?;
            }
            Op::AddRow(a, bias) => {
                self.accumulate(grads, *a, g.clone())?;
                if self.needs_grad(*bias) {
                    let mut gb = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (acc, v) in gb.row_mut(0).iter_mut().zip(g.row(r)) {
                            *acc += v;
                        }
                    }
                    self.accumulate(grads, *bias, gb)?;
                }
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, g.scale(*c))?,
            Op::Softmax(x) => {
                let y = &node.value;
                let mut gx = Matrix::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = g.row(r);
                    let inner: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for (c, out) in gx.row_mut(r).iter_mut().enumerate() {
                        *out = yr[c] * (gr[c] - inner);
                    }
                }
                self.accumulate(grads, *x, gx)?;
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                normalized,
                inv_std,
            } => {
                let gam = self.value(*gamma);
                let n = normalized.cols();
                if self.needs_grad(*x) {
                    let mut gx = Matrix::zeros(normalized.rows(), n);
                    for r in 0..normalized.rows() {
                        let xh = normalized.row(r);
                        let dxh: Vec<f64> = (0..n).map(|c| g.get(r, c) * gam.get(0, c)).collect();
                        let mean_d = dxh.iter().sum::<f64>() / n as f64;
                        let mean_dx = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                        for (c, out) in gx.row_mut(r).iter_mut().enumerate() {
                            *out = inv_std[r] * (dxh[c] - mean_d - xh[c] * mean_dx);
                        }
                    }
                    self.accumulate(grads, *x, gx)?;
                }
                if self.needs_grad(*gamma) {
                    let mut gg = Matrix::zeros(1, n);
                    for r in 0..normalized.rows() {
                        for c in 0..n {
                            gg.data_mut()[c] += g.get(r, c) * normalized.get(r, c);
                        }
                    }
                    self.accumulate(grads, *gamma, gg)?;
                }
                if self.needs_grad(*beta) {
                    let mut gb = Matrix::zeros(1, n);
                    for r in 0..g.rows() {
                        for c in 0..n {
                            gb.data_mut()[c] += g.get(r, c);
                        }
                    }
                    self.accumulate(grads, *beta, gb)?;
                }
            }
            Op::Gelu(x) => {
                let xm = self.value(*x);
                let mut gx = xm.clone();
                for (out, (&a, &gv)) in gx.data_mut().iter_mut().zip(xm.data().iter().zip(g.data())) {
                    let u = SQRT_2_OVER_PI * (a + GELU_C * a * a * a);
                    let t = u.tanh();
                    let du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_C * a * a);
                    *out = gv * (0.5 * (1.0 + t) + 0.5 * a * (1.0 - t * t) * du);
                }
                self.accumulate(grads, *x, gx)?;
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for p in parts {
                    let rows = self.value(*p).rows();
                    if self.needs_grad(*p) {
                        self.accumulate(grads, *p, g.slice_rows(start, rows)?)?;
                    }
                    start += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for p in parts {
                    let cols = self.value(*p).cols();
                    if self.needs_grad(*p) {
                        self.accumulate(grads, *p, g.slice_cols(start, cols)?)?;
                    }
                    start += cols;
                }
            }
            Op::SliceRows(x, start) => {
                let src = self.value(*x);
                let mut gx = Matrix::zeros(src.rows(), src.cols());
                let w = src.cols();
                gx.data_mut()[start * w..(start + g.rows()) * w].copy_from_slice(g.data());
                self.accumulate(grads, *x, gx)?;
            }
            Op::SliceCols(x, start) => {
                let src = self.value(*x);
                let mut gx = Matrix::zeros(src.rows(), src.cols());
                for r in 0..g.rows() {
                    gx.row_mut(r)[*start..start + g.cols()].copy_from_slice(g.row(r));
                }
                self.accumulate(grads, *x, gx)?;
            }
            Op::Reshape(x) => {
                let (r, c) = self.value(*x).shape();
                self.accumulate(grads, *x, g.reshape(r, c)?)?;
            }
            Op::MeanSquare(x) => {
                let xm = self.value(*x);
                let k = 2.0 * g.get(0, 0) / xm.len() as f64;
                self.accumulate(grads, *x, xm.scale(k))?;
            }
        }
        Ok(())
    }
}
