//! Reverse-mode automatic differentiation sized for 1-D CNNs, dense
//! layers, and GRU cells at desk scale, plus the Adam optimizer.

mod adam;
mod graph;
mod gru;
mod kernels;
mod tensor;

use thiserror::Error;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamOptimizer, AdamState};
pub use graph::{Graph, NodeId, Precision};
pub use gru::{gru_cell, GruCellIds};
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{op}: {what} has shape {got:?}, expected {expected}")]
    ShapeMismatch {
        op: &'static str,
        what: &'static str,
        got: Vec<usize>,
        expected: String,
    },
    #[error("non-finite value produced by {op} (first at flat index {index})")]
    NonFinite { op: &'static str, index: usize },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("backward already called on this graph; rebuild before differentiating again")]
    BackwardConsumed,
    #[error("binary cross-entropy targets must be 0 or 1, found {0}")]
    InvalidTarget(f64),
}
