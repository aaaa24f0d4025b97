//! Define-by-run reverse-mode differentiation.
//!
//! Every forward operation appends a node holding its value and the ids of its
//! inputs. Inputs always precede their consumers, so walking the nodes in
//! reverse append order is a valid topological order for the backward pass.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::kernels::{self, abs_slope};
use super::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Operation kinds, used to label nodes and to target the fault-injection
/// fixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Leaf,
    Add,
    Sub,
    Mul,
    AddBias,
    MatMul,
    Tanh,
    Sigmoid,
    MeanAbs,
    Sum,
    ConvFeature1d,
    ConvTemporal2d,
    ConcatTimePad,
    TimeStep,
    RowSlice,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    MatMul(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    MeanAbs(Var),
    Sum(Var),
    ConvFeature1d { input: Var, kernels: Var, bias: Var },
    ConvTemporal2d { input: Var, kernels: Var, bias: Var },
    ConcatTimePad(Var, Var),
    TimeStep { input: Var, step: usize },
    RowSlice { input: Var, start: usize },
}

impl Op {
    fn kind(&self) -> OpKind {
        match self {
            Op::Leaf => OpKind::Leaf,
            Op::Add(..) => OpKind::Add,
            Op::Sub(..) => OpKind::Sub,
            Op::Mul(..) => OpKind::Mul,
            Op::AddBias(..) => OpKind::AddBias,
            Op::MatMul(..) => OpKind::MatMul,
            Op::Tanh(_) => OpKind::Tanh,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::MeanAbs(_) => OpKind::MeanAbs,
            Op::Sum(_) => OpKind::Sum,
            Op::ConvFeature1d { .. } => OpKind::ConvFeature1d,
            Op::ConvTemporal2d { .. } => OpKind::ConvTemporal2d,
            Op::ConcatTimePad(..) => OpKind::ConcatTimePad,
            Op::TimeStep { .. } => OpKind::TimeStep,
            Op::RowSlice { .. } => OpKind::RowSlice,
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op,
    requires_grad: bool,
    /// Some ancestor (or the node itself) requires a gradient.
    tracked: bool,
}

/// Record of a forward computation.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    sabotage: Option<OpKind>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            sabotage: None,
        }
    }

    /// Negative-control fixture: scales every backward contribution flowing
    /// through nodes of `kind` by 1.5, producing wrong gradients on purpose.
    #[doc(hidden)]
    pub fn sabotage(&mut self, kind: OpKind) {
        self.sabotage = Some(kind);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds an input tensor. Only leaves with `requires_grad` receive
    /// gradients from [`Tape::backward`].
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
            tracked: requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn kind(&self, v: Var) -> OpKind {
        self.nodes[v.0].op.kind()
    }

    fn push(&mut self, value: Tensor<T>, op: Op, inputs: &[Var]) -> Var {
        let tracked = inputs.iter().any(|v| self.nodes[v.0].tracked);
        self.nodes.push(Node {
            value,
            op,
            requires_grad: false,
            tracked,
        });
        Var(self.nodes.len() - 1)
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(T, T) -> T) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        x.same_shape(y, "elementwise")?;
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        Ok(self.push(value, op, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, Op::Add(a, b), |p, q| p + q)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, Op::Sub(a, b), |p, q| p - q)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, Op::Mul(a, b), |p, q| p * q)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = kernels::matmul(self.value(a), self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    /// Adds a per-row bias vector to a matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let value = kernels::add_bias(self.value(a), self.value(bias))?;
        Ok(self.push(value, Op::AddBias(a, bias), &[a, bias]))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(T::tanh);
        self.push(value, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(kernels::sigmoid);
        self.push(value, Op::Sigmoid(a), &[a])
    }

    /// Mean of absolute values, as a rank-0 tensor.
    pub fn mean_abs(&mut self, a: Var) -> Result<Var> {
        let value = Tensor::scalar(kernels::mean_abs(self.value(a))?);
        Ok(self.push(value, Op::MeanAbs(a), &[a]))
    }

    /// Sum of all entries, as a rank-0 tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).data().iter().copied().sum());
        self.push(value, Op::Sum(a), &[a])
    }

    pub fn conv_feature_1d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let value = kernels::conv_feature_1d(self.value(input), self.value(kernels), self.value(bias))?;
        Ok(self.push(
            value,
            Op::ConvFeature1d { input, kernels, bias },
            &[input, kernels, bias],
        ))
    }

    pub fn conv_temporal_2d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let value = kernels::conv_temporal_2d(self.value(input), self.value(kernels), self.value(bias))?;
        Ok(self.push(
            value,
            Op::ConvTemporal2d { input, kernels, bias },
            &[input, kernels, bias],
        ))
    }

    pub fn concat_time_pad(&mut self, c1: Var, c2: Var) -> Result<Var> {
        let value = kernels::concat_time_pad(self.value(c1), self.value(c2))?;
        Ok(self.push(value, Op::ConcatTimePad(c1, c2), &[c1, c2]))
    }

    /// Column `step` of each window as an `F x B` matrix.
    pub fn time_step(&mut self, input: Var, step: usize) -> Result<Var> {
        let value = kernels::time_step(self.value(input), step)?;
        Ok(self.push(value, Op::TimeStep { input, step }, &[input]))
    }

    pub fn row_slice(&mut self, input: Var, start: usize, len: usize) -> Result<Var> {
        let value = kernels::row_slice(self.value(input), start, len)?;
        Ok(self.push(value, Op::RowSlice { input, start }, &[input]))
    }

    /// Propagates d(loss)/d(node) back to every leaf that requires a gradient.
    ///
    /// Consumes the tape; the next forward pass records onto a fresh one.
    pub fn backward(self, loss: Var) -> Result<Gradients<T>> {
        let Tape { nodes, sabotage } = self;
        let loss_node = nodes
            .get(loss.0)
            .ok_or_else(|| Error::Contract("loss does not belong to this tape".into()))?;
        if loss_node.value.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                loss_node.value.shape()
            )));
        }

        let mut grads: Vec<Option<Vec<T>>> = Vec::with_capacity(nodes.len());
        grads.resize_with(nodes.len(), || None);
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let node = &nodes[idx];
            if !node.tracked || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(mut g) = grads[idx].take() else {
                continue;
            };
            if sabotage == Some(node.op.kind()) {
                let scale = T::lit(1.5);
                g.iter_mut().for_each(|v| *v *= scale);
            }
            let mut acc = Accumulator {
                nodes: &nodes,
                grads: &mut grads,
            };
            propagate(&node.op, &node.value, &g, &mut acc);
        }

        let grads = nodes
            .iter()
            .zip(grads)
            .map(|(node, g)| {
                node.requires_grad.then(|| {
                    let data = g.unwrap_or_else(|| vec![T::zero(); node.value.numel()]);
                    Tensor::new(node.value.shape().to_vec(), data).expect("gradient shape")
                })
            })
            .collect();
        Ok(Gradients { grads })
    }
}

struct Accumulator<'a, T> {
    nodes: &'a [Node<T>],
    grads: &'a mut [Option<Vec<T>>],
}

impl<T: Scalar> Accumulator<'_, T> {
    /// Gradient buffer for `v`, or `None` when nothing upstream needs it.
    fn slot(&mut self, v: Var) -> Option<&mut [T]> {
        let node = &self.nodes[v.0];
        if !node.tracked {
            return None;
        }
        let numel = node.value.numel();
        Some(self.grads[v.0].get_or_insert_with(|| vec![T::zero(); numel]))
    }

    fn add(&mut self, v: Var, contrib: &[T]) {
        if let Some(buf) = self.slot(v) {
            buf.iter_mut().zip(contrib).for_each(|(b, &c)| *b += c);
        }
    }

    fn add_map(&mut self, v: Var, len: usize, f: impl Fn(usize) -> T) {
        if let Some(buf) = self.slot(v) {
            debug_assert_eq!(buf.len(), len);
            buf.iter_mut().enumerate().for_each(|(i, b)| *b += f(i));
        }
    }
}

fn propagate<T: Scalar>(op: &Op, out: &Tensor<T>, g: &[T], acc: &mut Accumulator<'_, T>) {
    let n = g.len();
    let nodes = acc.nodes;
    let val = |v: Var| &nodes[v.0].value;
    match *op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            acc.add(a, g);
            acc.add(b, g);
        }
        Op::Sub(a, b) => {
            acc.add(a, g);
            acc.add_map(b, n, |i| -g[i]);
        }
        Op::Mul(a, b) => {
            let (x, y) = (val(a).data(), val(b).data());
            acc.add_map(a, n, |i| g[i] * y[i]);
            acc.add_map(b, n, |i| g[i] * x[i]);
        }
        Op::AddBias(a, bias) => {
            acc.add(a, g);
            let cols = out.shape()[1];
            let rows = out.shape()[0];
            acc.add_map(bias, rows, |r| g[r * cols..(r + 1) * cols].iter().copied().sum());
        }
        Op::MatMul(a, b) => {
            let (x, y) = (val(a), val(b));
            if let Some(ga) = acc.slot(a) {
                kernels::matmul_vjp(x, y, g, Some(ga), None);
            }
            if let Some(gb) = acc.slot(b) {
                kernels::matmul_vjp(x, y, g, None, Some(gb));
            }
        }
        Op::Tanh(a) => {
            let y = out.data();
            acc.add_map(a, n, |i| g[i] * (T::one() - y[i] * y[i]));
        }
        Op::Sigmoid(a) => {
            let y = out.data();
            acc.add_map(a, n, |i| g[i] * y[i] * (T::one() - y[i]));
        }
        Op::MeanAbs(a) => {
            let x = val(a).data();
            let scale = g[0] / T::lit(x.len() as f64);
            acc.add_map(a, x.len(), |i| scale * abs_slope(x[i]));
        }
        Op::Sum(a) => {
            let len = val(a).numel();
            acc.add_map(a, len, |_| g[0]);
        }
        Op::ConvFeature1d { input, kernels: k, bias } => {
            let (gx, gw, gb) = kernels::conv_feature_1d_vjp(val(input), val(k), g);
            acc.add(input, &gx);
            acc.add(k, &gw);
            acc.add(bias, &gb);
        }
        Op::ConvTemporal2d { input, kernels: k, bias } => {
            let (gx, gw, gb) = kernels::conv_temporal_2d_vjp(val(input), val(k), g);
            acc.add(input, &gx);
            acc.add(k, &gw);
            acc.add(bias, &gb);
        }
        Op::ConcatTimePad(c1, c2) => {
            let (g1, g2) = kernels::concat_time_pad_vjp(val(c1).shape(), val(c2).shape(), g);
            acc.add(c1, &g1);
            acc.add(c2, &g2);
        }
        Op::TimeStep { input, step } => {
            let shape = val(input).shape();
            if let Some(gx) = acc.slot(input) {
                kernels::time_step_vjp(shape, step, g, gx);
            }
        }
        Op::RowSlice { input, start } => {
            let cols = out.shape()[1];
            if let Some(gx) = acc.slot(input) {
                let dst = &mut gx[start * cols..start * cols + n];
                dst.iter_mut().zip(g).for_each(|(d, &v)| *d += v);
            }
        }
    }
}

/// Gradients of a scalar loss with respect to the tape's trainable leaves.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of `v`, present iff `v` is a leaf with `requires_grad`.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}
