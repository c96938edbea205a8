//! Define-by-run reverse-mode differentiation over dense tensors.
//!
//! A [`Graph`] is built per batch: leaves enter via [`Graph::input`] /
//! [`Graph::param`], operations append nodes in topological order, and
//! [`Graph::backward`] walks the tape once in reverse. Non-parameter
//! subgraphs skip gradient storage entirely.

use serde::{Deserialize, Serialize};

use super::kernels;
use super::tensor::Tensor;
use super::GraphError;

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

/// Storage precision of graph results.
///
/// `F32` keeps the single `f64` code path but rounds every operation
/// result, gradient, and optimizer update through `f32`, so stored
/// values carry single precision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Broadcast {
    /// Identical shapes.
    None,
    /// Right operand is a single element applied everywhere.
    RhsScalar,
    /// Right operand matches the left except for a leading extent of 1.
    RhsBatch,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add { a: usize, b: usize, bc: Broadcast },
    Sub { a: usize, b: usize, bc: Broadcast },
    Mul { a: usize, b: usize, bc: Broadcast },
    Div { a: usize, b: usize, bc: Broadcast },
    Scale { x: usize, c: f64 },
    AddConst { x: usize },
    MaxConst { x: usize, c: f64 },
    Sqrt { x: usize },
    Relu { x: usize },
    Elu { x: usize },
    Sigmoid { x: usize },
    Tanh { x: usize },
    MeanAll { x: usize },
    SumAll { x: usize },
    MeanBatch { x: usize },
    Dense { x: usize, w: usize, b: Option<usize> },
    Conv1d { x: usize, k: usize, b: usize },
    Concat { parts: Vec<usize>, axis: usize },
    Narrow { x: usize, axis: usize, start: usize, len: usize },
    Reshape { x: usize },
    PermuteLast { x: usize, perm: Vec<usize> },
    BceWithLogits { logits: usize, targets: usize },
}

struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
}

/// Tape of operation records plus per-node gradient slots.
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    precision: Precision,
    check_finite: bool,
    backward_done: bool,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::with_precision(Precision::F64)
    }

    pub fn with_precision(precision: Precision) -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
            precision,
            check_finite: true,
            backward_done: false,
        }
    }

    /// Disables the per-operation finite scan. Loss values are still
    /// checked by callers; this only skips the elementwise sweep.
    pub fn set_check_finite(&mut self, on: bool) {
        self.check_finite = on;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    /// Gradient of the last backward pass for `id`, if one was stored.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Registers a non-trainable leaf (data, noise, targets).
    pub fn input(&mut self, value: Tensor) -> Result<NodeId, GraphError> {
        self.push(Op::Leaf, value, false)
    }

    /// Registers a trainable leaf whose gradient will be stored.
    pub fn param(&mut self, value: Tensor) -> Result<NodeId, GraphError> {
        self.push(Op::Leaf, value, true)
    }

    fn push(&mut self, op: Op, mut value: Tensor, needs_grad: bool) -> Result<NodeId, GraphError> {
        if self.precision == Precision::F32 {
            value.round_to_f32();
        }
        if self.check_finite {
            if let Some(index) = value.first_non_finite() {
                return Err(GraphError::NonFinite {
                    op: op_name(&op),
                    index,
                });
            }
        }
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn any_grad(&self, ids: &[usize]) -> bool {
        ids.iter().any(|&i| self.nodes[i].needs_grad)
    }

    fn broadcast_kind(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
    ) -> Result<Broadcast, GraphError> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        if sa == sb {
            return Ok(Broadcast::None);
        }
        if self.nodes[b.0].value.is_scalar() {
            return Ok(Broadcast::RhsScalar);
        }
        if sa.len() == sb.len() && sb[0] == 1 && sa[1..] == sb[1..] {
            return Ok(Broadcast::RhsBatch);
        }
        Err(GraphError::ShapeMismatch {
            op,
            what: "right operand",
            got: sb.to_vec(),
            expected: format!("{sa:?}, a scalar, or {sa:?} with leading extent 1"),
        })
    }

    fn binary(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
        make: impl Fn(usize, usize, Broadcast) -> Op,
    ) -> Result<NodeId, GraphError> {
        let bc = self.broadcast_kind(op_name, a, b)?;
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[b.0].value;
        let mut out = vec![0.0; va.len()];
        match bc {
            Broadcast::None => {
                for (o, (&x, &y)) in out.iter_mut().zip(va.data().iter().zip(vb.data())) {
                    *o = f(x, y);
                }
            }
            Broadcast::RhsScalar => {
                let y = vb.item();
                for (o, &x) in out.iter_mut().zip(va.data()) {
                    *o = f(x, y);
                }
            }
            Broadcast::RhsBatch => {
                let inner = vb.len();
                for (row, chunk) in va.data().chunks_exact(inner).enumerate() {
                    for (i, &x) in chunk.iter().enumerate() {
                        out[row * inner + i] = f(x, vb.data()[i]);
                    }
                }
            }
        }
        let value = Tensor::new(va.shape().to_vec(), out)?;
        let needs = self.any_grad(&[a.0, b.0]);
        self.push(make(a.0, b.0, bc), value, needs)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary("add", a, b, |x, y| x + y, |a, b, bc| Op::Add { a, b, bc })
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary("sub", a, b, |x, y| x - y, |a, b, bc| Op::Sub { a, b, bc })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary("mul", a, b, |x, y| x * y, |a, b, bc| Op::Mul { a, b, bc })
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary("div", a, b, |x, y| x / y, |a, b, bc| Op::Div { a, b, bc })
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, |v| c * v)?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::Scale { x: x.0, c }, value, needs)
    }

    pub fn add_const(&mut self, x: NodeId, c: f64) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, |v| v + c)?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::AddConst { x: x.0 }, value, needs)
    }

    /// Elementwise `max(x, c)`; gradient passes only where `x > c`.
    pub fn max_const(&mut self, x: NodeId, c: f64) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, |v| v.max(c))?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::MaxConst { x: x.0, c }, value, needs)
    }

    pub fn sqrt(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, f64::sqrt)?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::Sqrt { x: x.0 }, value, needs)
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, |v| if v > 0.0 { v } else { 0.0 })?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::Relu { x: x.0 }, value, needs)
    }

    pub fn elu(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, |v| if v > 0.0 { v } else { v.exp_m1() })?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::Elu { x: x.0 }, value, needs)
    }

    /// Logistic function with the pre-activation saturated at `|z| = 36`,
    /// which keeps outputs strictly inside `(0, 1)` in 64-bit storage.
    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, sigmoid_stable)?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::Sigmoid { x: x.0 }, value, needs)
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let value = self.map_unary(x, f64::tanh)?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::Tanh { x: x.0 }, value, needs)
    }

    fn map_unary(&self, x: NodeId, f: impl Fn(f64) -> f64) -> Result<Tensor, GraphError> {
        let v = &self.nodes[x.0].value;
        Tensor::new(v.shape().to_vec(), v.data().iter().map(|&a| f(a)).collect())
    }

    pub fn mean_all(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let v = &self.nodes[x.0].value;
        let m = v.data().iter().sum::<f64>() / v.len() as f64;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::MeanAll { x: x.0 }, Tensor::scalar(m), needs)
    }

    pub fn sum_all(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let v = &self.nodes[x.0].value;
        let s = v.data().iter().sum::<f64>();
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::SumAll { x: x.0 }, Tensor::scalar(s), needs)
    }

    /// Mean over the leading axis, keeping it with extent 1.
    pub fn mean_batch(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let v = &self.nodes[x.0].value;
        if v.rank() < 2 {
            return Err(GraphError::ShapeMismatch {
                op: "mean_batch",
                what: "input",
                got: v.shape().to_vec(),
                expected: "rank >= 2".into(),
            });
        }
        let b = v.shape()[0];
        let inner = v.len() / b;
        let mut out = vec![0.0; inner];
        for chunk in v.data().chunks_exact(inner) {
            for (o, &val) in out.iter_mut().zip(chunk) {
                *o += val;
            }
        }
        for o in &mut out {
            *o /= b as f64;
        }
        let mut shape = v.shape().to_vec();
        shape[0] = 1;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::MeanBatch { x: x.0 }, Tensor::new(shape, out)?, needs)
    }

    /// Affine map `y = x W^T + bias` for `x (B, D_in)`, `w (D_out, D_in)`.
    pub fn dense(
        &mut self,
        x: NodeId,
        w: NodeId,
        bias: Option<NodeId>,
    ) -> Result<NodeId, GraphError> {
        let (vx, vw) = (&self.nodes[x.0].value, &self.nodes[w.0].value);
        if vx.rank() != 2 || vw.rank() != 2 {
            return Err(GraphError::ShapeMismatch {
                op: "dense",
                what: "input/weight rank",
                got: vec![vx.rank(), vw.rank()],
                expected: "(B, D_in) and (D_out, D_in)".into(),
            });
        }
        let (b, d_in) = (vx.shape()[0], vx.shape()[1]);
        let (d_out, wd_in) = (vw.shape()[0], vw.shape()[1]);
        if wd_in != d_in {
            return Err(GraphError::ShapeMismatch {
                op: "dense",
                what: "weight inner dimension",
                got: vec![wd_in],
                expected: format!("{d_in}"),
            });
        }
        if let Some(bid) = bias {
            let vb = &self.nodes[bid.0].value;
            if vb.shape() != [d_out] {
                return Err(GraphError::ShapeMismatch {
                    op: "dense",
                    what: "bias",
                    got: vb.shape().to_vec(),
                    expected: format!("[{d_out}]"),
                });
            }
        }
        let mut y = vec![0.0; b * d_out];
        kernels::dense_forward(
            vx.data(),
            vw.data(),
            bias.map(|id| self.nodes[id.0].value.data()),
            b,
            d_in,
            d_out,
            &mut y,
        );
        let mut inputs = vec![x.0, w.0];
        if let Some(bid) = bias {
            inputs.push(bid.0);
        }
        let needs = self.any_grad(&inputs);
        self.push(
            Op::Dense {
                x: x.0,
                w: w.0,
                b: bias.map(|id| id.0),
            },
            Tensor::new(vec![b, d_out], y)?,
            needs,
        )
    }

    /// Same-padding stride-1 cross-correlation for `x (B, C_in, L)`,
    /// `k (C_out, C_in, W)` with odd `W`, and `bias (C_out)`.
    pub fn conv1d(&mut self, x: NodeId, k: NodeId, bias: NodeId) -> Result<NodeId, GraphError> {
        let (vx, vk, vb) = (
            &self.nodes[x.0].value,
            &self.nodes[k.0].value,
            &self.nodes[bias.0].value,
        );
        if vx.rank() != 3 || vk.rank() != 3 {
            return Err(GraphError::ShapeMismatch {
                op: "conv1d",
                what: "input/kernel rank",
                got: vec![vx.rank(), vk.rank()],
                expected: "(B, C_in, L) and (C_out, C_in, W)".into(),
            });
        }
        let (b, c_in, l) = (vx.shape()[0], vx.shape()[1], vx.shape()[2]);
        let (c_out, kc_in, w_len) = (vk.shape()[0], vk.shape()[1], vk.shape()[2]);
        if kc_in != c_in {
            return Err(GraphError::ShapeMismatch {
                op: "conv1d",
                what: "kernel input channels",
                got: vec![kc_in],
                expected: format!("{c_in}"),
            });
        }
        if w_len.is_multiple_of(2) {
            return Err(GraphError::ShapeMismatch {
                op: "conv1d",
                what: "kernel width",
                got: vec![w_len],
                expected: "an odd width".into(),
            });
        }
        if vb.shape() != [c_out] {
            return Err(GraphError::ShapeMismatch {
                op: "conv1d",
                what: "bias",
                got: vb.shape().to_vec(),
                expected: format!("[{c_out}]"),
            });
        }
        let mut y = vec![0.0; b * c_out * l];
        kernels::conv1d_forward(
            vx.data(),
            vk.data(),
            vb.data(),
            b,
            c_in,
            l,
            c_out,
            w_len,
            &mut y,
        );
        let needs = self.any_grad(&[x.0, k.0, bias.0]);
        self.push(
            Op::Conv1d {
                x: x.0,
                k: k.0,
                b: bias.0,
            },
            Tensor::new(vec![b, c_out, l], y)?,
            needs,
        )
    }

    /// Concatenates tensors along `axis`; all other extents must agree.
    pub fn concat(&mut self, parts: &[NodeId], axis: usize) -> Result<NodeId, GraphError> {
        if parts.is_empty() {
            return Err(GraphError::ShapeMismatch {
                op: "concat",
                what: "parts",
                got: vec![0],
                expected: "at least one tensor".into(),
            });
        }
        let first = self.nodes[parts[0].0].value.shape().to_vec();
        let rank = first.len();
        if axis >= rank {
            return Err(GraphError::ShapeMismatch {
                op: "concat",
                what: "axis",
                got: vec![axis],
                expected: format!("< rank {rank}"),
            });
        }
        let mut axis_total = 0;
        for p in parts {
            let s = self.nodes[p.0].value.shape();
            if s.len() != rank
                || s[..axis] != first[..axis]
                || s[axis + 1..] != first[axis + 1..]
            {
                return Err(GraphError::ShapeMismatch {
                    op: "concat",
                    what: "part",
                    got: s.to_vec(),
                    expected: format!("{first:?} up to axis {axis}"),
                });
            }
            axis_total += s[axis];
        }
        let outer: usize = first[..axis].iter().product();
        let inner: usize = first[axis + 1..].iter().product();
        let mut shape = first.clone();
        shape[axis] = axis_total;
        let mut out = vec![0.0; outer * axis_total * inner];
        let mut base = 0;
        for p in parts {
            let v = &self.nodes[p.0].value;
            let pa = v.shape()[axis];
            for row in 0..outer {
                let src = &v.data()[row * pa * inner..(row + 1) * pa * inner];
                let dst_start = (row * axis_total + base) * inner;
                out[dst_start..dst_start + pa * inner].copy_from_slice(src);
            }
            base += pa;
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.0).collect();
        let needs = self.any_grad(&ids);
        self.push(
            Op::Concat { parts: ids, axis },
            Tensor::new(shape, out)?,
            needs,
        )
    }

    /// Selects `len` extents starting at `start` along `axis`.
    pub fn narrow(
        &mut self,
        x: NodeId,
        axis: usize,
        start: usize,
        len: usize,
    ) -> Result<NodeId, GraphError> {
        let v = &self.nodes[x.0].value;
        let shape = v.shape().to_vec();
        if axis >= shape.len() || start + len > shape[axis] || len == 0 {
            return Err(GraphError::ShapeMismatch {
                op: "narrow",
                what: "range",
                got: vec![start, len],
                expected: format!("within extent {} of axis {axis}", shape[axis]),
            });
        }
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let full = shape[axis];
        let mut out = vec![0.0; outer * len * inner];
        for row in 0..outer {
            let src = &v.data()[(row * full + start) * inner..(row * full + start + len) * inner];
            out[row * len * inner..(row + 1) * len * inner].copy_from_slice(src);
        }
        let mut new_shape = shape;
        new_shape[axis] = len;
        let needs = self.nodes[x.0].needs_grad;
        self.push(
            Op::Narrow {
                x: x.0,
                axis,
                start,
                len,
            },
            Tensor::new(new_shape, out)?,
            needs,
        )
    }

    pub fn reshape(&mut self, x: NodeId, shape: Vec<usize>) -> Result<NodeId, GraphError> {
        let v = self.nodes[x.0].value.reshaped(shape)?;
        let needs = self.nodes[x.0].needs_grad;
        self.push(Op::Reshape { x: x.0 }, v, needs)
    }

    /// Gathers along the last axis: `out[.., i] = in[.., perm[i]]`.
    pub fn permute_last(&mut self, x: NodeId, perm: &[usize]) -> Result<NodeId, GraphError> {
        let v = &self.nodes[x.0].value;
        let last = *v.shape().last().unwrap_or(&0);
        if perm.len() != last {
            return Err(GraphError::ShapeMismatch {
                op: "permute_last",
                what: "permutation",
                got: vec![perm.len()],
                expected: format!("{last}"),
            });
        }
        let rows = v.len() / last;
        let mut out = vec![0.0; v.len()];
        for r in 0..rows {
            let src = &v.data()[r * last..(r + 1) * last];
            let dst = &mut out[r * last..(r + 1) * last];
            for (i, &p) in perm.iter().enumerate() {
                dst[i] = src[p];
            }
        }
        let needs = self.nodes[x.0].needs_grad;
        self.push(
            Op::PermuteLast {
                x: x.0,
                perm: perm.to_vec(),
            },
            Tensor::new(v.shape().to_vec(), out)?,
            needs,
        )
    }

    /// Mean binary cross-entropy between logits and `{0,1}` targets in the
    /// stable log-sum-exp form `max(z,0) - z*t + ln(1 + exp(-|z|))`.
    pub fn bce_with_logits(&mut self, logits: NodeId, targets: NodeId) -> Result<NodeId, GraphError> {
        let (vl, vt) = (&self.nodes[logits.0].value, &self.nodes[targets.0].value);
        if vl.shape() != vt.shape() {
            return Err(GraphError::ShapeMismatch {
                op: "bce_with_logits",
                what: "targets",
                got: vt.shape().to_vec(),
                expected: format!("{:?}", vl.shape()),
            });
        }
        let mut acc = 0.0;
        for (&z, &t) in vl.data().iter().zip(vt.data()) {
            if t != 0.0 && t != 1.0 {
                return Err(GraphError::InvalidTarget(t));
            }
            acc += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
        }
        let mean = acc / vl.len() as f64;
        let needs = self.any_grad(&[logits.0, targets.0]);
        self.push(
            Op::BceWithLogits {
                logits: logits.0,
                targets: targets.0,
            },
            Tensor::scalar(mean),
            needs,
        )
    }

    /// Walks the tape in reverse from a scalar loss, filling gradient
    /// slots for every node on a parameter path. May be called once per
    /// graph; a second call without rebuilding is an error.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), GraphError> {
        if self.backward_done {
            return Err(GraphError::BackwardConsumed);
        }
        let lv = &self.nodes[loss.0].value;
        if !lv.is_scalar() {
            return Err(GraphError::NonScalarLoss(lv.shape().to_vec()));
        }
        self.backward_done = true;
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..self.nodes.len()).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(gout) = self.grads[i].take() else {
                continue;
            };
            self.propagate(i, &gout)?;
            self.grads[i] = Some(gout);
        }

        if self.precision == Precision::F32 {
            for g in self.grads.iter_mut().flatten() {
                g.round_to_f32();
            }
        }
        if self.check_finite {
            for (i, g) in self.grads.iter().enumerate() {
                if let Some(g) = g {
                    if let Some(index) = g.first_non_finite() {
                        return Err(GraphError::NonFinite {
                            op: op_name(&self.nodes[i].op),
                            index,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, id: usize, delta: impl IntoIterator<Item = f64>) {
        if !self.nodes[id].needs_grad {
            return;
        }
        let slot = self.grads[id]
            .get_or_insert_with(|| Tensor::zeros(self.nodes[id].value.shape().to_vec()));
        for (g, d) in slot.data_mut().iter_mut().zip(delta) {
            *g += d;
        }
    }

    fn accumulate_reduced(&mut self, id: usize, bc: Broadcast, full: Vec<f64>) {
        if !self.nodes[id].needs_grad {
            return;
        }
        match bc {
            Broadcast::None => self.accumulate(id, full),
            Broadcast::RhsScalar => {
                let s: f64 = full.iter().sum();
                self.accumulate(id, [s]);
            }
            Broadcast::RhsBatch => {
                let inner = self.nodes[id].value.len();
                let mut red = vec![0.0; inner];
                for chunk in full.chunks_exact(inner) {
                    for (r, &v) in red.iter_mut().zip(chunk) {
                        *r += v;
                    }
                }
                self.accumulate(id, red);
            }
        }
    }

    /// Expands the right operand of a broadcast binary op to full size.
    fn rhs_values(&self, b: usize, bc: Broadcast, full_len: usize) -> Vec<f64> {
        let vb = &self.nodes[b].value;
        match bc {
            Broadcast::None => vb.data().to_vec(),
            Broadcast::RhsScalar => vec![vb.item(); full_len],
            Broadcast::RhsBatch => {
                let mut out = Vec::with_capacity(full_len);
                while out.len() < full_len {
                    out.extend_from_slice(vb.data());
                }
                out
            }
        }
    }

    fn propagate(&mut self, i: usize, gout: &Tensor) -> Result<(), GraphError> {
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf => {}
            Op::Add { a, b, bc } => {
                self.accumulate(a, gout.data().iter().copied());
                self.accumulate_reduced(b, bc, gout.data().to_vec());
            }
            Op::Sub { a, b, bc } => {
                self.accumulate(a, gout.data().iter().copied());
                self.accumulate_reduced(b, bc, gout.data().iter().map(|g| -g).collect());
            }
            Op::Mul { a, b, bc } => {
                let bv = self.rhs_values(b, bc, gout.len());
                let av = self.nodes[a].value.data().to_vec();
                self.accumulate(a, gout.data().iter().zip(&bv).map(|(g, y)| g * y));
                self.accumulate_reduced(
                    b,
                    bc,
                    gout.data().iter().zip(&av).map(|(g, x)| g * x).collect(),
                );
            }
            Op::Div { a, b, bc } => {
                let bv = self.rhs_values(b, bc, gout.len());
                let av = self.nodes[a].value.data().to_vec();
                self.accumulate(a, gout.data().iter().zip(&bv).map(|(g, y)| g / y));
                self.accumulate_reduced(
                    b,
                    bc,
                    gout.data()
                        .iter()
                        .zip(&av)
                        .zip(&bv)
                        .map(|((g, x), y)| -g * x / (y * y))
                        .collect(),
                );
            }
            Op::Scale { x, c } => {
                self.accumulate(x, gout.data().iter().map(|g| g * c));
            }
            Op::AddConst { x } => {
                self.accumulate(x, gout.data().iter().copied());
            }
            Op::MaxConst { x, c } => {
                let xv = self.nodes[x].value.data().to_vec();
                self.accumulate(
                    x,
                    gout.data()
                        .iter()
                        .zip(&xv)
                        .map(|(g, &v)| if v > c { *g } else { 0.0 }),
                );
            }
            Op::Sqrt { x } => {
                let yv = self.nodes[i].value.data().to_vec();
                self.accumulate(
                    x,
                    gout.data().iter().zip(&yv).map(|(g, y)| 0.5 * g / y),
                );
            }
            Op::Relu { x } => {
                let xv = self.nodes[x].value.data().to_vec();
                self.accumulate(
                    x,
                    gout.data()
                        .iter()
                        .zip(&xv)
                        .map(|(g, &v)| if v > 0.0 { *g } else { 0.0 }),
                );
            }
            Op::Elu { x } => {
                let xv = self.nodes[x].value.data().to_vec();
                let yv = self.nodes[i].value.data().to_vec();
                self.accumulate(
                    x,
                    gout.data()
                        .iter()
                        .zip(xv.iter().zip(&yv))
                        .map(|(g, (&v, &y))| if v > 0.0 { *g } else { g * (y + 1.0) }),
                );
            }
            Op::Sigmoid { x } => {
                let yv = self.nodes[i].value.data().to_vec();
                self.accumulate(
                    x,
                    gout.data().iter().zip(&yv).map(|(g, y)| g * y * (1.0 - y)),
                );
            }
            Op::Tanh { x } => {
                let yv = self.nodes[i].value.data().to_vec();
                self.accumulate(
                    x,
                    gout.data().iter().zip(&yv).map(|(g, y)| g * (1.0 - y * y)),
                );
            }
            Op::MeanAll { x } => {
                let n = self.nodes[x].value.len();
                let g = gout.item() / n as f64;
                self.accumulate(x, std::iter::repeat_n(g, n));
            }
            Op::SumAll { x } => {
                let n = self.nodes[x].value.len();
                let g = gout.item();
                self.accumulate(x, std::iter::repeat_n(g, n));
            }
            Op::MeanBatch { x } => {
                let b = self.nodes[x].value.shape()[0];
                let inner = self.nodes[x].value.len() / b;
                let gv: Vec<f64> = gout.data().iter().map(|g| g / b as f64).collect();
                self.accumulate(x, (0..b * inner).map(|j| gv[j % inner]));
            }
            Op::Dense { x, w, b } => {
                let (dx, dw, db) = {
                    let vx = &self.nodes[x].value;
                    let vw = &self.nodes[w].value;
                    let (bs, d_in) = (vx.shape()[0], vx.shape()[1]);
                    let d_out = vw.shape()[0];
                    let dx = self.nodes[x].needs_grad.then(|| {
                        let mut dx = vec![0.0; bs * d_in];
                        kernels::dense_backward_input(
                            gout.data(),
                            vw.data(),
                            bs,
                            d_in,
                            d_out,
                            &mut dx,
                        );
                        dx
                    });
                    let dw = self.nodes[w].needs_grad.then(|| {
                        let mut dw = vec![0.0; d_out * d_in];
                        kernels::dense_backward_weight(
                            vx.data(),
                            gout.data(),
                            bs,
                            d_in,
                            d_out,
                            &mut dw,
                        );
                        dw
                    });
                    let db = b.filter(|&bid| self.nodes[bid].needs_grad).map(|_| {
                        let mut db = vec![0.0; d_out];
                        kernels::dense_backward_bias(gout.data(), bs, d_out, &mut db);
                        db
                    });
                    (dx, dw, db)
                };
                if let Some(d) = dx {
                    self.accumulate(x, d);
                }
                if let Some(d) = dw {
                    self.accumulate(w, d);
                }
                if let (Some(bid), Some(d)) = (b, db) {
                    self.accumulate(bid, d);
                }
            }
            Op::Conv1d { x, k, b } => {
                let (dx, dk, db) = {
                    let vx = &self.nodes[x].value;
                    let vk = &self.nodes[k].value;
                    let (bs, c_in, l) = (vx.shape()[0], vx.shape()[1], vx.shape()[2]);
                    let (c_out, w_len) = (vk.shape()[0], vk.shape()[2]);
                    let dx = self.nodes[x].needs_grad.then(|| {
                        let mut dx = vec![0.0; bs * c_in * l];
                        kernels::conv1d_backward_input(
                            gout.data(),
                            vk.data(),
                            bs,
                            c_in,
                            l,
                            c_out,
                            w_len,
                            &mut dx,
                        );
                        dx
                    });
                    let dk = self.nodes[k].needs_grad.then(|| {
                        let mut dk = vec![0.0; c_out * c_in * w_len];
                        kernels::conv1d_backward_kernel(
                            vx.data(),
                            gout.data(),
                            bs,
                            c_in,
                            l,
                            c_out,
                            w_len,
                            &mut dk,
                        );
                        dk
                    });
                    let db = self.nodes[b].needs_grad.then(|| {
                        let mut db = vec![0.0; c_out];
                        kernels::conv1d_backward_bias(gout.data(), bs, c_out, l, &mut db);
                        db
                    });
                    (dx, dk, db)
                };
                if let Some(d) = dx {
                    self.accumulate(x, d);
                }
                if let Some(d) = dk {
                    self.accumulate(k, d);
                }
                if let Some(d) = db {
                    self.accumulate(b, d);
                }
            }
            Op::Concat { parts, axis } => {
                let shape = self.nodes[i].value.shape().to_vec();
                let outer: usize = shape[..axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let total = shape[axis];
                let mut base = 0;
                for p in parts {
                    let pa = self.nodes[p].value.shape()[axis];
                    if self.nodes[p].needs_grad {
                        let mut dp = vec![0.0; outer * pa * inner];
                        for row in 0..outer {
                            let src_start = (row * total + base) * inner;
                            dp[row * pa * inner..(row + 1) * pa * inner]
                                .copy_from_slice(&gout.data()[src_start..src_start + pa * inner]);
                        }
                        self.accumulate(p, dp);
                    }
                    base += pa;
                }
            }
            Op::Narrow {
                x,
                axis,
                start,
                len,
            } => {
                let shape = self.nodes[x].value.shape().to_vec();
                let outer: usize = shape[..axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let full = shape[axis];
                let mut dx = vec![0.0; self.nodes[x].value.len()];
                for row in 0..outer {
                    let dst_start = (row * full + start) * inner;
                    dx[dst_start..dst_start + len * inner]
                        .copy_from_slice(&gout.data()[row * len * inner..(row + 1) * len * inner]);
                }
                self.accumulate(x, dx);
            }
            Op::Reshape { x } => {
                self.accumulate(x, gout.data().iter().copied());
            }
            Op::PermuteLast { x, perm } => {
                let last = perm.len();
                let rows = gout.len() / last;
                let mut dx = vec![0.0; gout.len()];
                for r in 0..rows {
                    let src = &gout.data()[r * last..(r + 1) * last];
                    let dst = &mut dx[r * last..(r + 1) * last];
                    for (idx, &p) in perm.iter().enumerate() {
                        dst[p] += src[idx];
                    }
                }
                self.accumulate(x, dx);
            }
            Op::BceWithLogits { logits, targets } => {
                let zl = self.nodes[logits].value.data().to_vec();
                let tv = self.nodes[targets].value.data().to_vec();
                let n = zl.len() as f64;
                let g = gout.item();
                self.accumulate(
                    logits,
                    zl.iter()
                        .zip(&tv)
                        .map(|(&z, &t)| g * (sigmoid_stable(z) - t) / n),
                );
            }
        }
        Ok(())
    }
}

fn sigmoid_stable(z: f64) -> f64 {
    let z = z.clamp(-36.0, 36.0);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::Add { .. } => "add",
        Op::Sub { .. } => "sub",
        Op::Mul { .. } => "mul",
        Op::Div { .. } => "div",
        Op::Scale { .. } => "scale",
        Op::AddConst { .. } => "add_const",
        Op::MaxConst { .. } => "max_const",
        Op::Sqrt { .. } => "sqrt",
        Op::Relu { .. } => "relu",
        Op::Elu { .. } => "elu",
        Op::Sigmoid { .. } => "sigmoid",
        Op::Tanh { .. } => "tanh",
        Op::MeanAll { .. } => "mean_all",
        Op::SumAll { .. } => "sum_all",
        Op::MeanBatch { .. } => "mean_batch",
        Op::Dense { .. } => "dense",
        Op::Conv1d { .. } => "conv1d",
        Op::Concat { .. } => "concat",
        Op::Narrow { .. } => "narrow",
        Op::Reshape { .. } => "reshape",
        Op::PermuteLast { .. } => "permute_last",
        Op::BceWithLogits { .. } => "bce_with_logits",
    }
}
