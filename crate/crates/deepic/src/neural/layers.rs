//! Graph-building blocks shared by the autoencoder variants.

use std::collections::BTreeMap;

use crate::ndgrad::{gru_cell, Graph, GraphError, GruCellIds, NodeId, Tensor};

use super::NeuralError;

/// Name-to-node map of one graph's registered parameters.
pub struct Bindings {
    map: BTreeMap<String, NodeId>,
}

impl Bindings {
    /// Registers every parameter on the tape, as trainable leaves when
    /// `trainable` or plain inputs for inference-only graphs.
    pub fn bind(
        g: &mut Graph,
        params: &BTreeMap<String, Tensor>,
        trainable: bool,
    ) -> Result<Self, GraphError> {
        let mut map = BTreeMap::new();
        for (name, value) in params {
            let id = if trainable {
                g.param(value.clone())?
            } else {
                g.input(value.clone())?
            };
            map.insert(name.clone(), id);
        }
        Ok(Self { map })
    }

    pub fn id(&self, name: &str) -> Result<NodeId, NeuralError> {
        self.map
            .get(name)
            .copied()
            .ok_or_else(|| NeuralError::MissingParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &NodeId)> {
        self.map.iter()
    }
}

/// Chain of same-padding 1-D convolutions with ELU between layers and a
/// linear final layer. Parameter names are `{prefix}.conv{i}.{w,b}`.
pub fn cnn_block(
    g: &mut Graph,
    bind: &Bindings,
    prefix: &str,
    mut x: NodeId,
    layers: usize,
) -> Result<NodeId, NeuralError> {
    for i in 0..layers {
        let w = bind.id(&format!("{prefix}.conv{i}.w"))?;
        let b = bind.id(&format!("{prefix}.conv{i}.b"))?;
        x = g.conv1d(x, w, b)?;
        if i + 1 < layers {
            x = g.elu(x)?;
        }
    }
    Ok(x)
}

/// Dense stack with ELU between layers and a linear final layer.
/// Parameter names are `{prefix}.fc{i}.{w,b}`.
pub fn dense_stack(
    g: &mut Graph,
    bind: &Bindings,
    prefix: &str,
    mut x: NodeId,
    layers: usize,
) -> Result<NodeId, NeuralError> {
    for i in 0..layers {
        let w = bind.id(&format!("{prefix}.fc{i}.w"))?;
        let b = bind.id(&format!("{prefix}.fc{i}.b"))?;
        x = g.dense(x, w, Some(b))?;
        if i + 1 < layers {
            x = g.elu(x)?;
        }
    }
    Ok(x)
}

fn gru_ids(bind: &Bindings, prefix: &str) -> Result<GruCellIds, NeuralError> {
    Ok(GruCellIds {
        w_z: bind.id(&format!("{prefix}.wz"))?,
        u_z: bind.id(&format!("{prefix}.uz"))?,
        b_z: bind.id(&format!("{prefix}.bz"))?,
        w_r: bind.id(&format!("{prefix}.wr"))?,
        u_r: bind.id(&format!("{prefix}.ur"))?,
        b_r: bind.id(&format!("{prefix}.br"))?,
        w_n: bind.id(&format!("{prefix}.wn"))?,
        u_n: bind.id(&format!("{prefix}.un"))?,
        b_n: bind.id(&format!("{prefix}.bn"))?,
        b_hn: bind.id(&format!("{prefix}.bhn"))?,
    })
}

/// Stacked bidirectional GRU over a `(J, C, K)` sequence; returns the
/// per-position concatenation of both directions' top-layer states as
/// `(J, 2H, K)`. Layer `l` parameters live under
/// `{prefix}.l{l}.{f,b}.*`.
pub fn bigru_stack(
    g: &mut Graph,
    bind: &Bindings,
    prefix: &str,
    x: NodeId,
    layers: usize,
    hidden: usize,
) -> Result<NodeId, NeuralError> {
    let shape = g.shape(x).to_vec();
    let (j, _c, k) = (shape[0], shape[1], shape[2]);

    // Per-position feature vectors (J, C) for the current layer.
    let mut features: Vec<NodeId> = (0..k)
        .map(|pos| {
            let s = g.narrow(x, 2, pos, 1)?;
            g.reshape(s, vec![j, shape[1]])
        })
        .collect::<Result<_, _>>()?;

    for l in 0..layers {
        let fwd = gru_ids(bind, &format!("{prefix}.l{l}.f"))?;
        let bwd = gru_ids(bind, &format!("{prefix}.l{l}.b"))?;

        let mut h = g.input(Tensor::zeros(vec![j, hidden]))?;
        let mut fwd_states = Vec::with_capacity(k);
        for &xt in &features {
            h = gru_cell(g, xt, h, &fwd)?;
            fwd_states.push(h);
        }
        let mut h = g.input(Tensor::zeros(vec![j, hidden]))?;
        let mut bwd_states = vec![NodeId(0); k];
        for pos in (0..k).rev() {
            h = gru_cell(g, features[pos], h, &bwd)?;
            bwd_states[pos] = h;
        }
        features = (0..k)
            .map(|pos| g.concat(&[fwd_states[pos], bwd_states[pos]], 1))
            .collect::<Result<_, _>>()?;
    }

    // Reassemble (J, 2H, K).
    let columns: Vec<NodeId> = features
        .into_iter()
        .map(|f| g.reshape(f, vec![j, 2 * hidden, 1]))
        .collect::<Result<_, _>>()?;
    Ok(g.concat(&columns, 2)?)
}

/// Detached per-branch normalization statistics of one encode pass.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BranchStat {
    /// Scalar mode stores one element; vector mode one per position.
    pub mean: Vec<f64>,
    /// Standard deviation after the epsilon floor.
    pub std: Vec<f64>,
}

/// Normalizes one `(J, 1, K)` branch to zero mean and unit power.
///
/// Batch mode estimates the moments from the batch inside the graph so
/// gradients flow through them; the returned [`BranchStat`] carries the
/// detached values for moving-average tracking.
pub fn normalize_batch(
    g: &mut Graph,
    x: NodeId,
    per_position: bool,
    epsilon: f64,
) -> Result<(NodeId, BranchStat), NeuralError> {
    let mu = if per_position {
        g.mean_batch(x)?
    } else {
        g.mean_all(x)?
    };
    let centered = g.sub(x, mu)?;
    let sq = g.mul(centered, centered)?;
    let var = if per_position {
        g.mean_batch(sq)?
    } else {
        g.mean_all(sq)?
    };
    let sd = g.sqrt(var)?;
    let raw_sd = g.value(sd).data().to_vec();
    if raw_sd.iter().any(|&s| s < epsilon) {
        log::warn!(
            "power normalizer: std {:?} below floor {epsilon}, clamping",
            raw_sd
        );
    }
    let sd = g.max_const(sd, epsilon)?;
    let out = g.div(centered, sd)?;
    Ok((
        out,
        BranchStat {
            mean: g.value(mu).data().to_vec(),
            std: g.value(sd).data().to_vec(),
        },
    ))
}

/// Applies stored statistics: `(x - mean) / std` with constants.
pub fn normalize_frozen(
    g: &mut Graph,
    x: NodeId,
    stat: &BranchStat,
    k: usize,
) -> Result<NodeId, NeuralError> {
    let (mu, sd) = if stat.mean.len() == 1 {
        (
            g.input(Tensor::scalar(stat.mean[0]))?,
            g.input(Tensor::scalar(stat.std[0]))?,
        )
    } else {
        if stat.mean.len() != k {
            return Err(NeuralError::Shape(format!(
                "frozen stats of length {} do not fit block length {k}",
                stat.mean.len()
            )));
        }
        (
            g.input(Tensor::new(vec![1, 1, k], stat.mean.clone())?)?,
            g.input(Tensor::new(vec![1, 1, k], stat.std.clone())?)?,
        )
    };
    let centered = g.sub(x, mu)?;
    Ok(g.div(centered, sd)?)
}
