//! GRU cell assembled from graph primitives.
//!
//! Gates follow the usual convention: `z` and `r` are sigmoid gates over
//! the input and previous hidden state, the candidate is
//! `n = tanh(W_n x + b_n + r .* (U_n h + b_hn))`, and the new state is
//! `h' = (1 - z) .* n + z .* h`. Gradients through time come for free
//! from chaining cells on one tape.

use super::graph::{Graph, NodeId};
use super::GraphError;

/// Graph node ids of one cell's parameters.
///
/// `w_*` act on the input `(D_h, D_x)`, `u_*` on the hidden state
/// `(D_h, D_h)`, `b_*` are biases `(D_h)`. `b_hn` is the inner bias of
/// the candidate term gated by `r`.
#[derive(Clone, Copy, Debug)]
pub struct GruCellIds {
    pub w_z: NodeId,
    pub u_z: NodeId,
    pub b_z: NodeId,
    pub w_r: NodeId,
    pub u_r: NodeId,
    pub b_r: NodeId,
    pub w_n: NodeId,
    pub u_n: NodeId,
    pub b_n: NodeId,
    pub b_hn: NodeId,
}

/// Applies one GRU step to a batch: `x (B, D_x)`, `h (B, D_h)` -> `(B, D_h)`.
pub fn gru_cell(
    g: &mut Graph,
    x: NodeId,
    h: NodeId,
    p: &GruCellIds,
) -> Result<NodeId, GraphError> {
    let zx = g.dense(x, p.w_z, Some(p.b_z))?;
    let zh = g.dense(h, p.u_z, None)?;
    let z = {
        let s = g.add(zx, zh)?;
        g.sigmoid(s)?
    };
    let rx = g.dense(x, p.w_r, Some(p.b_r))?;
    let rh = g.dense(h, p.u_r, None)?;
    let r = {
        let s = g.add(rx, rh)?;
        g.sigmoid(s)?
    };
    let inner = g.dense(h, p.u_n, Some(p.b_hn))?;
    let gated = g.mul(r, inner)?;
    let nx = g.dense(x, p.w_n, Some(p.b_n))?;
    let n = {
        let s = g.add(nx, gated)?;
        g.tanh(s)?
    };
    // h' = (1 - z) .* n + z .* h
    let neg_z = g.scale(z, -1.0)?;
    let one_minus_z = g.add_const(neg_z, 1.0)?;
    let a = g.mul(one_minus_z, n)?;
    let b = g.mul(z, h)?;
    g.add(a, b)
}
