//! Dense-matrix reverse-mode differentiation and the Adam optimizer.
//!
//! A [`Tape`] records every operation of one forward pass. Values are
//! row-major `f64` matrices; a scalar is a `1 x 1` matrix. After
//! [`Tape::backward`] each leaf created with `requires_grad` holds the
//! gradient of the loss, accumulated over repeated calls.
//!
//! Parameters live outside the tape in a [`ParamSet`]; they are copied in as
//! leaves for each forward pass and their gradients copied back out.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

/// Probability clamp used by [`Tape::bce_loss`].
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn column(data: Vec<f64>) -> Self {
        Self {
            rows: data.len(),
            cols: 1,
            data,
        }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The single value of a `1 x 1` tensor.
    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[p * m..(p + 1) * m];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor {
            rows: n,
            cols: m,
            data: out,
        })
    }

    /// `self * other^T`.
    fn matmul_nt(&self, other: &Tensor) -> Tensor {
        let (n, k, m) = (self.rows, self.cols, other.rows);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let arow = &self.data[i * k..(i + 1) * k];
            for j in 0..m {
                let brow = &other.data[j * k..(j + 1) * k];
                out[i * m + j] = arow.iter().zip(brow).map(|(a, b)| a * b).sum();
            }
        }
        Tensor {
            rows: n,
            cols: m,
            data: out,
        }
    }

    /// `self^T * other`.
    fn matmul_tn(&self, other: &Tensor) -> Tensor {
        let (k, n, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for p in 0..k {
            let arow = &self.data[p * n..(p + 1) * n];
            let brow = &other.data[p * m..(p + 1) * m];
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out[i * m..(i + 1) * m];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Tensor {
            rows: n,
            cols: m,
            data: out,
        }
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Arc<[f64]>),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    ConcatCols(Vec<Var>),
    OuterSum(Var, Var),
    MaskedSoftmax(Var),
    Sum(Var),
    Bce {
        p: Var,
        y: Arc<[f64]>,
        w: Arc<[f64]>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Tensor>,
}

/// Record of one forward computation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn zero_grads(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// Adds a `1 x c` row vector to every row of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xs, bs) = (self.shape(x), self.shape(b));
        if bs != (1, xs.1) {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                left: xs,
                right: bs,
            });
        }
        let bias = self.value(b).data().to_vec();
        let mut value = self.value(x).clone();
        for r in 0..xs.0 {
            for (v, bb) in value.data[r * xs.1..(r + 1) * xs.1].iter_mut().zip(&bias) {
                *v += bb;
            }
        }
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(value, Op::AddBias(x, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::ShapeMismatch {
                op: "add",
                left: self.shape(a),
                right: self.shape(b),
            });
        }
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let mut value = self.value(x).clone();
        value.data.iter_mut().for_each(|v| *v *= k);
        let rg = self.rg(x);
        self.push(value, Op::Scale(x, k), rg)
    }

    /// Elementwise product with a constant of the same shape.
    pub fn mul_const(&mut self, x: Var, c: Arc<[f64]>) -> Result<Var> {
        let xs = self.shape(x);
        if c.len() != xs.0 * xs.1 {
            return Err(Error::ShapeMismatch {
                op: "mul_const",
                left: xs,
                right: (c.len(), 1),
            });
        }
        let mut value = self.value(x).clone();
        for (v, k) in value.data.iter_mut().zip(c.iter()) {
            *v *= k;
        }
        let rg = self.rg(x);
        Ok(self.push(value, Op::MulConst(x, c), rg))
    }

    /// Mean of several same-shape tensors.
    pub fn mean_of(&mut self, xs: &[Var]) -> Result<Var> {
        let mut acc = xs[0];
        for &x in &xs[1..] {
            acc = self.add(acc, x)?;
        }
        Ok(if xs.len() == 1 {
            acc
        } else {
            self.scale(acc, 1.0 / xs.len() as f64)
        })
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let mut value = self.value(x).clone();
        value.data.iter_mut().for_each(|v| *v = v.max(0.0));
        let rg = self.rg(x);
        self.push(value, Op::Relu(x), rg)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let mut value = self.value(x).clone();
        value
            .data
            .iter_mut()
            .for_each(|v| *v = if *v > 0.0 { *v } else { slope * *v });
        let rg = self.rg(x);
        self.push(value, Op::LeakyRelu(x, slope), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let mut value = self.value(x).clone();
        value.data.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rg = self.rg(x);
        self.push(value, Op::Sigmoid(x), rg)
    }

    pub fn concat_cols(&mut self, xs: &[Var]) -> Result<Var> {
        let rows = self.shape(xs[0]).0;
        if let Some(&bad) = xs.iter().find(|&&x| self.shape(x).0 != rows) {
            return Err(Error::ShapeMismatch {
                op: "concat_cols",
                left: self.shape(xs[0]),
                right: self.shape(bad),
            });
        }
        let cols: usize = xs.iter().map(|&x| self.shape(x).1).sum();
        let mut value = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &x in xs {
                let src = self.value(x);
                let c = src.cols;
                value.data[r * cols + off..r * cols + off + c].copy_from_slice(src.row(r));
                off += c;
            }
        }
        let rg = xs.iter().any(|&x| self.rg(x));
        Ok(self.push(value, Op::ConcatCols(xs.to_vec()), rg))
    }

    /// `out[i][j] = a[i] + b[j]` for column vectors `a` (n x 1) and `b` (m x 1).
    pub fn outer_sum(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != 1 || sb.1 != 1 {
            return Err(Error::ShapeMismatch {
                op: "outer_sum",
                left: sa,
                right: sb,
            });
        }
        let (n, m) = (sa.0, sb.0);
        let mut value = Tensor::zeros(n, m);
        {
            let av = self.value(a).data();
            let bv = self.value(b).data();
            for i in 0..n {
                for j in 0..m {
                    value.data[i * m + j] = av[i] + bv[j];
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::OuterSum(a, b), rg))
    }

    /// Row-wise softmax over the entries where `mask` is true, with max
    /// subtraction; masked-out entries are exactly 0.
    pub fn masked_softmax(&mut self, s: Var, mask: Arc<[bool]>) -> Result<Var> {
        let (rows, cols) = self.shape(s);
        if mask.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "masked_softmax",
                left: (rows, cols),
                right: (mask.len(), 1),
            });
        }
        let mut value = Tensor::zeros(rows, cols);
        {
            let sv = self.value(s).data();
            for r in 0..rows {
                let m = &mask[r * cols..(r + 1) * cols];
                let row = &sv[r * cols..(r + 1) * cols];
                let mut max = f64::NEG_INFINITY;
                for (x, &on) in row.iter().zip(m) {
                    if on && *x > max {
                        max = *x;
                    }
                }
                if max == f64::NEG_INFINITY {
                    return Err(Error::EmptySoftmaxRow { row: r });
                }
                let out = &mut value.data[r * cols..(r + 1) * cols];
                let mut total = 0.0;
                for ((o, x), &on) in out.iter_mut().zip(row).zip(m) {
                    if on {
                        *o = exp(x - max);
                        total += *o;
                    }
                }
                out.iter_mut().for_each(|o| *o /= total);
            }
        }
        let rg = self.rg(s);
        Ok(self.push(value, Op::MaskedSoftmax(s), rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(total), Op::Sum(x), rg)
    }

    /// Weighted binary cross-entropy averaged over entries:
    /// `-mean(w * (y ln p + (1 - y) ln(1 - p)))` with `p` clamped to
    /// `[BCE_EPS, 1 - BCE_EPS]`.
    pub fn bce_loss(&mut self, p: Var, y: Arc<[f64]>, weights: Arc<[f64]>) -> Result<Var> {
        let ps = self.shape(p);
        let len = ps.0 * ps.1;
        if y.len() != len || weights.len() != len {
            return Err(Error::ShapeMismatch {
                op: "bce_loss",
                left: ps,
                right: (y.len(), weights.len()),
            });
        }
        let pv = self.value(p).data();
        let mut total = 0.0;
        for k in 0..len {
            let pc = pv[k].clamp(BCE_EPS, 1.0 - BCE_EPS);
            total -= weights[k] * (y[k] * ln(pc) + (1.0 - y[k]) * ln(1.0 - pc));
        }
        let rg = self.rg(p);
        Ok(self.push(
            Tensor::scalar(total / len as f64),
            Op::Bce { p, y, w: weights },
            rg,
        ))
    }

    /// Backpropagates from a scalar loss, accumulating into leaf gradients.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::NonScalarLoss(self.shape(loss)));
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let op = self.nodes[idx].op.clone();
            match op {
                Op::Leaf => {
                    let node = &mut self.nodes[idx];
                    match &mut node.grad {
                        Some(acc) => acc.add_assign(&g),
                        None => node.grad = Some(g),
                    }
                }
                Op::MatMul(a, b) => {
                    if self.rg(a) {
                        let da = g.matmul_nt(self.value(b));
                        accumulate(&mut adj, a, da);
                    }
                    if self.rg(b) {
                        let db = self.value(a).matmul_tn(&g);
                        accumulate(&mut adj, b, db);
                    }
                }
                Op::AddBias(x, b) => {
                    if self.rg(b) {
                        let mut db = Tensor::zeros(1, g.cols);
                        for r in 0..g.rows {
                            for (d, v) in db.data.iter_mut().zip(g.row(r)) {
                                *d += v;
                            }
                        }
                        accumulate(&mut adj, b, db);
                    }
                    if self.rg(x) {
                        accumulate(&mut adj, x, g);
                    }
                }
                Op::Add(a, b) => {
                    if self.rg(a) {
                        accumulate(&mut adj, a, g.clone());
                    }
                    if self.rg(b) {
                        accumulate(&mut adj, b, g);
                    }
                }
                Op::Scale(x, k) => {
                    let mut d = g;
                    d.data.iter_mut().for_each(|v| *v *= k);
                    accumulate(&mut adj, x, d);
                }
                Op::MulConst(x, c) => {
                    let mut d = g;
                    for (v, k) in d.data.iter_mut().zip(c.iter()) {
                        *v *= k;
                    }
                    accumulate(&mut adj, x, d);
                }
                Op::Relu(x) => {
                    let mut d = g;
                    for (v, y) in d.data.iter_mut().zip(self.nodes[idx].value.data()) {
                        if *y <= 0.0 {
                            *v = 0.0;
                        }
                    }
                    accumulate(&mut adj, x, d);
                }
                Op::LeakyRelu(x, slope) => {
                    let mut d = g;
                    for (v, xin) in d.data.iter_mut().zip(self.value(x).data()) {
                        if *xin <= 0.0 {
                            *v *= slope;
                        }
                    }
                    accumulate(&mut adj, x, d);
                }
                Op::Sigmoid(x) => {
                    let mut d = g;
                    for (v, y) in d.data.iter_mut().zip(self.nodes[idx].value.data()) {
                        *v *= y * (1.0 - y);
                    }
                    accumulate(&mut adj, x, d);
                }
                Op::ConcatCols(xs) => {
                    let rows = g.rows;
                    let mut off = 0;
                    for x in xs {
                        let c = self.shape(x).1;
                        if self.rg(x) {
                            let mut d = Tensor::zeros(rows, c);
                            for r in 0..rows {
                                d.data[r * c..(r + 1) * c]
                                    .copy_from_slice(&g.data[r * g.cols + off..r * g.cols + off + c]);
                            }
                            accumulate(&mut adj, x, d);
                        }
                        off += c;
                    }
                }
                Op::OuterSum(a, b) => {
                    let (n, m) = (g.rows, g.cols);
                    if self.rg(a) {
                        let da = (0..n).map(|i| g.row(i).iter().sum()).collect();
                        accumulate(&mut adj, a, Tensor::column(da));
                    }
                    if self.rg(b) {
                        let mut db = vec![0.0; m];
                        for i in 0..n {
                            for (d, v) in db.iter_mut().zip(g.row(i)) {
                                *d += v;
                            }
                        }
                        accumulate(&mut adj, b, Tensor::column(db));
                    }
                }
                Op::MaskedSoftmax(s) => {
                    let alpha = &self.nodes[idx].value;
                    let (rows, cols) = alpha.shape();
                    let mut d = Tensor::zeros(rows, cols);
                    for r in 0..rows {
                        let ar = alpha.row(r);
                        let gr = g.row(r);
                        let dot: f64 = ar.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for c in 0..cols {
                            d.data[r * cols + c] = ar[c] * (gr[c] - dot);
                        }
                    }
                    accumulate(&mut adj, s, d);
                }
                Op::Sum(x) => {
                    let (r, c) = self.shape(x);
                    accumulate(&mut adj, x, Tensor::filled(r, c, g.item()));
                }
                Op::Bce { p, y, w } => {
                    let pv = self.value(p);
                    let (r, c) = pv.shape();
                    let len = (r * c) as f64;
                    let scale = g.item();
                    let mut d = Tensor::zeros(r, c);
                    for k in 0..r * c {
                        let x = pv.data[k];
                        if x > BCE_EPS && x < 1.0 - BCE_EPS {
                            d.data[k] = -scale * w[k] * (y[k] / x - (1.0 - y[k]) / (1.0 - x)) / len;
                        }
                    }
                    accumulate(&mut adj, p, d);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(adj: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut adj[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Trainable tensors with gradient accumulators of matching shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub values: Vec<Tensor>,
    pub grads: Vec<Tensor>,
}

impl ParamSet {
    pub fn new(values: Vec<Tensor>) -> Self {
        let grads = values
            .iter()
            .map(|t| Tensor::zeros(t.rows, t.cols))
            .collect();
        Self { values, grads }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total scalar count.
    pub fn size(&self) -> usize {
        self.values.iter().map(|t| t.data.len()).sum()
    }

    /// Copies every parameter onto the tape as a differentiable leaf.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.values.iter().map(|t| tape.param(t.clone())).collect()
    }

    /// Adds the tape gradients of the bound leaves into `grads`.
    pub fn collect_grads(&mut self, tape: &Tape, vars: &[Var]) {
        for (acc, &v) in self.grads.iter_mut().zip(vars) {
            if let Some(g) = tape.grad(v) {
                acc.add_assign(g);
            }
        }
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| g.fill(0.0));
    }

    pub fn scale_grads(&mut self, k: f64) {
        for g in &mut self.grads {
            g.data.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }
}

/// Adam with bias correction and decoupled weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let zeros: Vec<Tensor> = params
            .values
            .iter()
            .map(|t| Tensor::zeros(t.rows, t.cols))
            .collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update from `params.grads`, then zeroes the gradients.
    pub fn step(&mut self, params: &mut ParamSet) {
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - libm::pow(c.beta1, self.step as f64);
        let bc2 = 1.0 - libm::pow(c.beta2, self.step as f64);
        for k in 0..params.values.len() {
            let p = &mut params.values[k].data;
            let g = &params.grads[k].data;
            let m = &mut self.m[k].data;
            let v = &mut self.v[k].data;
            for j in 0..p.len() {
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                p[j] -= c.lr * mhat / (sqrt(vhat) + c.eps);
                p[j] -= c.lr * c.weight_decay * p[j];
            }
        }
        params.zero_grads();
    }
}

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

/// Relative error with a floor on the denominator so that gradients near
/// zero are compared absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central finite-difference check of every scalar in `params`.
///
/// `loss` runs the forward pass for a given parameter set; `grads` are the
/// analytic gradients to compare.
pub fn finite_difference_check(
    params: &ParamSet,
    grads: &[Tensor],
    step: f64,
    mut loss: impl FnMut(&ParamSet) -> Result<f64>,
) -> Result<GradCheck> {
    let mut probe = params.clone();
    let mut out = GradCheck::default();
    for k in 0..params.values.len() {
        for j in 0..params.values[k].data.len() {
            let orig = params.values[k].data[j];
            probe.values[k].data[j] = orig + step;
            let up = loss(&probe)?;
            probe.values[k].data[j] = orig - step;
            let down = loss(&probe)?;
            probe.values[k].data[j] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads[k].data[j];
            out.checked += 1;
            out.max_rel_error = out.max_rel_error.max(relative_error(analytic, numeric));
            out.max_abs_error = out.max_abs_error.max((analytic - numeric).abs());
        }
    }
    Ok(out)
}
