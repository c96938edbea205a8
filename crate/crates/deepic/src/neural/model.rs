//! The two-user autoencoder model: parameter store, per-variant
//! encode/decode graph builders, and frozen-statistics inference.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::SeededRng;
use crate::interleaver::Interleaver;
use crate::ndgrad::{Graph, NodeId, Tensor};

use super::arch::{ArchConfig, NormMode, VariantKind};
use super::layers::{
    bigru_stack, cnn_block, dense_stack, normalize_batch, normalize_frozen, BranchStat, Bindings,
};
use super::NeuralError;

/// One of the two transmitter/receiver pairs. The users share an
/// architecture but never share weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum User {
    One,
    Two,
}

impl User {
    pub const BOTH: [User; 2] = [User::One, User::Two];

    pub fn prefix(&self) -> &'static str {
        match self {
            User::One => "u1",
            User::Two => "u2",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }
}

/// Immutable evaluation statistics for both users' three branches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenStats {
    pub user1: Vec<BranchStat>,
    pub user2: Vec<BranchStat>,
}

impl FrozenStats {
    pub fn branches(&self, user: User) -> &[BranchStat] {
        match user {
            User::One => &self.user1,
            User::Two => &self.user2,
        }
    }
}

/// Whether encoding estimates moments from the batch or applies the
/// stored statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatsMode {
    Batch,
    Frozen,
}

/// Encoder output handle plus the detached statistics of batch mode.
#[derive(Debug)]
pub struct EncodeResult {
    /// `(J, 3, K)` codeword node; channel `i` is branch `i+1`.
    pub codeword: NodeId,
    pub batch_stats: Option<Vec<BranchStat>>,
}

/// A complete two-user autoencoder: named parameters for both users,
/// the architecture they instantiate, and optional frozen statistics.
#[derive(Clone, Debug)]
pub struct AutoencoderModel {
    pub kind: VariantKind,
    pub arch: ArchConfig,
    pub seed: u64,
    pub params: BTreeMap<String, Tensor>,
    pub frozen: Option<FrozenStats>,
    pub interleaver: Option<Interleaver>,
}

/// Builds a freshly initialized model of the requested family.
///
/// Initialization is fan-based uniform (bound `sqrt(6/(fan_in+fan_out))`)
/// with one named stream per parameter, so two builds from one seed are
/// bit-identical regardless of construction order.
pub fn build_variant(
    kind: VariantKind,
    arch: &ArchConfig,
    seed: u64,
) -> Result<AutoencoderModel, NeuralError> {
    arch.validate().map_err(NeuralError::Shape)?;
    let mut params = BTreeMap::new();
    for user in User::BOTH {
        let p = user.prefix();
        match kind {
            VariantKind::Deepic | VariantKind::DeepicInterleaved => {
                for branch in 1..=3 {
                    push_cnn(
                        &mut params,
                        &format!("{p}.enc.b{branch}"),
                        encoder_conv_shapes(arch),
                    );
                }
                let iters = if arch.per_iteration_weights {
                    arch.dec_iterations
                } else {
                    1
                };
                for it in 0..iters {
                    for phi in 1..=2 {
                        let prefix = if arch.per_iteration_weights {
                            format!("{p}.dec.it{it}.phi{phi}")
                        } else {
                            format!("{p}.dec.phi{phi}")
                        };
                        push_cnn(&mut params, &prefix, decoder_conv_shapes(arch));
                    }
                }
                push_conv(
                    &mut params,
                    &format!("{p}.dec.head"),
                    1,
                    arch.feature_size,
                    1,
                );
            }
            VariantKind::CnnAe => {
                push_cnn(&mut params, &format!("{p}.enc"), cnn_ae_encoder_shapes(arch));
                push_cnn(&mut params, &format!("{p}.dec"), cnn_ae_decoder_shapes(arch));
            }
            VariantKind::RnnAe => {
                push_gru_stack(&mut params, &format!("{p}.enc.gru"), arch, 1);
                push_dense(
                    &mut params,
                    &format!("{p}.enc.head"),
                    2 * arch.rnn_hidden,
                    3,
                );
                push_gru_stack(&mut params, &format!("{p}.dec.gru"), arch, 3);
                push_dense(
                    &mut params,
                    &format!("{p}.dec.head"),
                    2 * arch.rnn_hidden,
                    1,
                );
            }
            VariantKind::FfAe => {
                let k = arch.block_len;
                push_dense_chain(&mut params, &format!("{p}.enc"), k, &arch.ff_hidden, 3 * k);
                push_dense_chain(&mut params, &format!("{p}.dec"), 3 * k, &arch.ff_hidden, k);
            }
        }
    }
    init_params(&mut params, seed);
    let interleaver = match kind {
        VariantKind::DeepicInterleaved => Some(Interleaver::random(
            arch.block_len,
            crate::channel::derive_seed(seed, &["model-interleaver"]),
        )),
        _ => None,
    };
    Ok(AutoencoderModel {
        kind,
        arch: arch.clone(),
        seed,
        params,
        frozen: None,
        interleaver,
    })
}

/// Conv shapes `(c_out, c_in, width)` of one encoder branch.
fn encoder_conv_shapes(arch: &ArchConfig) -> Vec<(usize, usize, usize)> {
    let c = arch.enc_channels;
    let w = arch.enc_kernel;
    let mut shapes = vec![(c, 1, w)];
    for _ in 1..arch.enc_layers {
        shapes.push((c, c, w));
    }
    shapes.push((1, c, 1)); // projection to one symbol channel
    shapes
}

/// Conv shapes of one decoder block: two served streams plus the prior
/// features in, feature width out.
fn decoder_conv_shapes(arch: &ArchConfig) -> Vec<(usize, usize, usize)> {
    let c = arch.dec_channels;
    let w = arch.dec_kernel;
    let f = arch.feature_size;
    let mut shapes = vec![(c, 2 + f, w)];
    for _ in 1..arch.dec_layers.saturating_sub(1) {
        shapes.push((c, c, w));
    }
    shapes.push((f, c, w));
    shapes
}

fn cnn_ae_encoder_shapes(arch: &ArchConfig) -> Vec<(usize, usize, usize)> {
    let c = arch.enc_channels;
    let w = arch.enc_kernel;
    let mut shapes = vec![(c, 1, w)];
    for _ in 1..arch.enc_layers {
        shapes.push((c, c, w));
    }
    shapes.push((3, c, 1));
    shapes
}

fn cnn_ae_decoder_shapes(arch: &ArchConfig) -> Vec<(usize, usize, usize)> {
    let c = arch.dec_channels;
    let w = arch.dec_kernel;
    let mut shapes = vec![(c, 3, w)];
    for _ in 1..arch.dec_layers.saturating_sub(1) {
        shapes.push((c, c, w));
    }
    shapes.push((1, c, w));
    shapes
}

fn push_cnn(params: &mut BTreeMap<String, Tensor>, prefix: &str, shapes: Vec<(usize, usize, usize)>) {
    for (i, (c_out, c_in, w)) in shapes.into_iter().enumerate() {
        params.insert(
            format!("{prefix}.conv{i}.w"),
            Tensor::zeros(vec![c_out, c_in, w]),
        );
        params.insert(format!("{prefix}.conv{i}.b"), Tensor::zeros(vec![c_out]));
    }
}

fn push_conv(
    params: &mut BTreeMap<String, Tensor>,
    prefix: &str,
    c_out: usize,
    c_in: usize,
    w: usize,
) {
    params.insert(
        format!("{prefix}.conv0.w"),
        Tensor::zeros(vec![c_out, c_in, w]),
    );
    params.insert(format!("{prefix}.conv0.b"), Tensor::zeros(vec![c_out]));
}

fn push_dense(params: &mut BTreeMap<String, Tensor>, prefix: &str, d_in: usize, d_out: usize) {
    params.insert(format!("{prefix}.w"), Tensor::zeros(vec![d_out, d_in]));
    params.insert(format!("{prefix}.b"), Tensor::zeros(vec![d_out]));
}

fn push_dense_chain(
    params: &mut BTreeMap<String, Tensor>,
    prefix: &str,
    d_in: usize,
    hidden: &[usize],
    d_out: usize,
) {
    let mut dims = vec![d_in];
    dims.extend_from_slice(hidden);
    dims.push(d_out);
    for i in 0..dims.len() - 1 {
        params.insert(
            format!("{prefix}.fc{i}.w"),
            Tensor::zeros(vec![dims[i + 1], dims[i]]),
        );
        params.insert(format!("{prefix}.fc{i}.b"), Tensor::zeros(vec![dims[i + 1]]));
    }
}

fn push_gru_stack(
    params: &mut BTreeMap<String, Tensor>,
    prefix: &str,
    arch: &ArchConfig,
    input_features: usize,
) {
    let h = arch.rnn_hidden;
    for l in 0..arch.rnn_layers {
        let d_in = if l == 0 { input_features } else { 2 * h };
        for dir in ["f", "b"] {
            let p = format!("{prefix}.l{l}.{dir}");
            for gate in ["wz", "wr", "wn"] {
                params.insert(format!("{p}.{gate}"), Tensor::zeros(vec![h, d_in]));
            }
            for gate in ["uz", "ur", "un"] {
                params.insert(format!("{p}.{gate}"), Tensor::zeros(vec![h, h]));
            }
            for gate in ["bz", "br", "bn", "bhn"] {
                params.insert(format!("{p}.{gate}"), Tensor::zeros(vec![h]));
            }
        }
    }
}

/// Fan-based uniform fill: weights get `U(-a, a)` with
/// `a = sqrt(6/(fan_in + fan_out))`, biases stay zero.
fn init_params(params: &mut BTreeMap<String, Tensor>, seed: u64) {
    for (name, tensor) in params.iter_mut() {
        let shape = tensor.shape().to_vec();
        let (fan_in, fan_out) = match shape.len() {
            3 => (shape[1] * shape[2], shape[0] * shape[2]),
            2 => (shape[1], shape[0]),
            _ => continue, // biases
        };
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut rng = SeededRng::new(seed, &format!("init/{name}"));
        for v in tensor.data_mut() {
            *v = rng.uniform(-bound, bound);
        }
    }
}

impl AutoencoderModel {
    pub fn param_count(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    /// Registers all parameters on a fresh tape.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Result<Bindings, NeuralError> {
        Ok(Bindings::bind(g, &self.params, trainable)?)
    }

    fn frozen_stats(&self) -> Result<&FrozenStats, NeuralError> {
        self.frozen.as_ref().ok_or(NeuralError::NoFrozenStats)
    }

    /// Maps a `{0,1}` bit tensor `(J, K)` onto the graph as `(J, 1, K)`
    /// antipodal values.
    fn embed_bits(&self, g: &mut Graph, bits: &Tensor) -> Result<NodeId, NeuralError> {
        let (j, k) = (bits.shape()[0], bits.shape()[1]);
        let x = g.input(bits.reshaped(vec![j, 1, k])?)?;
        let s = g.scale(x, 2.0)?;
        Ok(g.add_const(s, -1.0)?)
    }

    /// Builds the encoder of one user over a `(J, K)` bit batch and
    /// returns the normalized `(J, 3, K)` codeword.
    ///
    /// Batch mode needs `J >= 2` (the variance is undefined otherwise);
    /// frozen mode applies the stored statistics and is batch-size
    /// independent.
    pub fn encode_graph(
        &self,
        g: &mut Graph,
        bind: &Bindings,
        user: User,
        bits: &Tensor,
        mode: StatsMode,
    ) -> Result<EncodeResult, NeuralError> {
        if bits.rank() != 2 {
            return Err(NeuralError::Shape(format!(
                "bit batch must be (J, K), got {:?}",
                bits.shape()
            )));
        }
        let (j, k) = (bits.shape()[0], bits.shape()[1]);
        if mode == StatsMode::Batch && j < 2 {
            return Err(NeuralError::BatchTooSmall(j));
        }
        self.check_block_len(k)?;
        let p = user.prefix();

        let branches: Vec<NodeId> = match self.kind {
            VariantKind::Deepic | VariantKind::DeepicInterleaved => {
                let mut out = Vec::with_capacity(3);
                for branch in 1..=3 {
                    let data = if branch == 3 && self.kind == VariantKind::DeepicInterleaved {
                        let il = self.interleaver.as_ref().ok_or(NeuralError::NoInterleaver)?;
                        permute_bit_rows(bits, il)?
                    } else {
                        bits.clone()
                    };
                    let x = self.embed_bits(g, &data)?;
                    let layers = self.arch.enc_layers + 1;
                    out.push(cnn_block(g, bind, &format!("{p}.enc.b{branch}"), x, layers)?);
                }
                out
            }
            VariantKind::CnnAe => {
                let x = self.embed_bits(g, bits)?;
                let y = cnn_block(g, bind, &format!("{p}.enc"), x, self.arch.enc_layers + 1)?;
                split_channels(g, y)?
            }
            VariantKind::RnnAe => {
                let x = self.embed_bits(g, bits)?;
                let states = bigru_stack(
                    g,
                    bind,
                    &format!("{p}.enc.gru"),
                    x,
                    self.arch.rnn_layers,
                    self.arch.rnn_hidden,
                )?;
                let y = per_position_head(g, bind, &format!("{p}.enc.head"), states, 3)?;
                split_channels(g, y)?
            }
            VariantKind::FfAe => {
                let x = g.input(bits.clone())?;
                let s = g.scale(x, 2.0)?;
                let pm = g.add_const(s, -1.0)?;
                let y = dense_stack(
                    g,
                    bind,
                    &format!("{p}.enc"),
                    pm,
                    self.arch.ff_hidden.len() + 1,
                )?;
                let y = g.reshape(y, vec![j, 3, k])?;
                split_channels(g, y)?
            }
        };

        let per_position = self.arch.norm_mode == NormMode::PositionVector;
        let mut normalized = Vec::with_capacity(3);
        let mut stats = Vec::with_capacity(3);
        match mode {
            StatsMode::Batch => {
                for b in branches {
                    let (n, s) = normalize_batch(g, b, per_position, self.arch.norm_epsilon)?;
                    normalized.push(n);
                    stats.push(s);
                }
            }
            StatsMode::Frozen => {
                let frozen = self.frozen_stats()?;
                for (i, b) in branches.into_iter().enumerate() {
                    normalized.push(normalize_frozen(g, b, &frozen.branches(user)[i], k)?);
                }
            }
        }
        Ok(EncodeResult {
            codeword: g.concat(&normalized, 1)?,
            batch_stats: (mode == StatsMode::Batch).then_some(stats),
        })
    }

    /// Builds the decoder of one user over a received `(J, 3, K)` node
    /// and returns per-bit logits `(J, 1, K)`.
    pub fn decode_graph(
        &self,
        g: &mut Graph,
        bind: &Bindings,
        user: User,
        rx: NodeId,
    ) -> Result<NodeId, NeuralError> {
        let shape = g.shape(rx).to_vec();
        if shape.len() != 3 || shape[1] != 3 {
            return Err(NeuralError::Shape(format!(
                "received batch must be (J, 3, K), got {shape:?}"
            )));
        }
        let (j, k) = (shape[0], shape[2]);
        self.check_block_len(k)?;
        let p = user.prefix();

        match self.kind {
            VariantKind::Deepic | VariantKind::DeepicInterleaved => {
                let y1 = g.narrow(rx, 1, 0, 1)?;
                let y2 = g.narrow(rx, 1, 1, 1)?;
                let y3 = g.narrow(rx, 1, 2, 1)?;
                let interleaved = self.kind == VariantKind::DeepicInterleaved;
                let il = if interleaved {
                    Some(self.interleaver.as_ref().ok_or(NeuralError::NoInterleaver)?)
                } else {
                    None
                };
                let f = self.arch.feature_size;
                let iters = self.arch.dec_iterations;
                let mut prior = g.input(Tensor::zeros(vec![j, f, k]))?;
                let mut logits = None;
                for it in 0..iters {
                    let (p1, p2) = if self.arch.per_iteration_weights {
                        (
                            format!("{p}.dec.it{it}.phi1"),
                            format!("{p}.dec.it{it}.phi2"),
                        )
                    } else {
                        (format!("{p}.dec.phi1"), format!("{p}.dec.phi2"))
                    };
                    let in1 = g.concat(&[y1, y2, prior], 1)?;
                    let mut q1 = cnn_block(g, bind, &p1, in1, self.arch.dec_layers)?;
                    if let Some(il) = il {
                        q1 = g.permute_last(q1, il.perm())?;
                    }
                    let in2 = g.concat(&[y1, y3, q1], 1)?;
                    let q2 = cnn_block(g, bind, &p2, in2, self.arch.dec_layers)?;
                    if it + 1 == iters {
                        let mut head =
                            cnn_block(g, bind, &format!("{p}.dec.head"), q2, 1)?;
                        if let Some(il) = il {
                            head = g.permute_last(head, il.inverse())?;
                        }
                        logits = Some(head);
                    } else {
                        prior = match il {
                            Some(il) => g.permute_last(q2, il.inverse())?,
                            None => q2,
                        };
                    }
                }
                Ok(logits.expect("at least one decoder iteration"))
            }
            VariantKind::CnnAe => {
                Ok(cnn_block(g, bind, &format!("{p}.dec"), rx, self.arch.dec_layers)?)
            }
            VariantKind::RnnAe => {
                let states = bigru_stack(
                    g,
                    bind,
                    &format!("{p}.dec.gru"),
                    rx,
                    self.arch.rnn_layers,
                    self.arch.rnn_hidden,
                )?;
                per_position_head(g, bind, &format!("{p}.dec.head"), states, 1)
            }
            VariantKind::FfAe => {
                let flat = g.reshape(rx, vec![j, 3 * k])?;
                let y = dense_stack(
                    g,
                    bind,
                    &format!("{p}.dec"),
                    flat,
                    self.arch.ff_hidden.len() + 1,
                )?;
                Ok(g.reshape(y, vec![j, 1, k])?)
            }
        }
    }

    fn check_block_len(&self, k: usize) -> Result<(), NeuralError> {
        let tied = matches!(
            self.kind,
            VariantKind::FfAe | VariantKind::DeepicInterleaved
        );
        if tied && k != self.arch.block_len {
            return Err(NeuralError::Shape(format!(
                "variant {} is tied to block length {}, got {k}",
                self.kind.as_str(),
                self.arch.block_len
            )));
        }
        Ok(())
    }

    /// Encodes a bit batch under frozen statistics, returning row-major
    /// `(J, 3K)` codewords ready for the channel.
    pub fn encode_frozen(&self, user: User, bits: &Tensor) -> Result<Vec<f64>, NeuralError> {
        let mut g = Graph::new();
        let bind = self.bind(&mut g, false)?;
        let out = self.encode_graph(&mut g, &bind, user, bits, StatsMode::Frozen)?;
        Ok(g.value(out.codeword).data().to_vec())
    }

    /// Decodes received `(J, 3K)` rows under frozen statistics into bit
    /// posteriors in `(0, 1)`, row-major `(J, K)`.
    pub fn decode_frozen(
        &self,
        user: User,
        rx: &[f64],
        j: usize,
        k: usize,
    ) -> Result<Vec<f64>, NeuralError> {
        if rx.len() != j * 3 * k {
            return Err(NeuralError::Shape(format!(
                "received data of length {} does not fit (J={j}, 3K={})",
                rx.len(),
                3 * k
            )));
        }
        let mut g = Graph::new();
        let bind = self.bind(&mut g, false)?;
        let rx = g.input(Tensor::new(vec![j, 3, k], rx.to_vec())?)?;
        let logits = self.decode_graph(&mut g, &bind, user, rx)?;
        let post = g.sigmoid(logits)?;
        Ok(g.value(post).data().to_vec())
    }

    /// Single-block convenience over explicit branch streams.
    pub fn decode_streams(
        &self,
        user: User,
        y1: &[f64],
        y2: &[f64],
        y3: &[f64],
    ) -> Result<Vec<f64>, NeuralError> {
        if y1.len() != y2.len() || y1.len() != y3.len() {
            return Err(NeuralError::Shape(format!(
                "stream lengths differ: {} / {} / {}",
                y1.len(),
                y2.len(),
                y3.len()
            )));
        }
        let k = y1.len();
        let mut rx = Vec::with_capacity(3 * k);
        rx.extend_from_slice(y1);
        rx.extend_from_slice(y2);
        rx.extend_from_slice(y3);
        self.decode_frozen(user, &rx, 1, k)
    }
}

/// Splits a `(J, 3, K)` node into its three branch channels.
fn split_channels(g: &mut Graph, y: NodeId) -> Result<Vec<NodeId>, NeuralError> {
    Ok((0..3)
        .map(|i| g.narrow(y, 1, i, 1))
        .collect::<Result<_, _>>()?)
}

/// Applies a dense head independently at each position of a
/// `(J, C, K)` feature map, returning `(J, d_out, K)`.
fn per_position_head(
    g: &mut Graph,
    bind: &Bindings,
    prefix: &str,
    states: NodeId,
    d_out: usize,
) -> Result<NodeId, NeuralError> {
    let shape = g.shape(states).to_vec();
    let (j, c, k) = (shape[0], shape[1], shape[2]);
    let w = bind.id(&format!("{prefix}.w"))?;
    let b = bind.id(&format!("{prefix}.b"))?;
    let mut columns = Vec::with_capacity(k);
    for pos in 0..k {
        let col = g.narrow(states, 2, pos, 1)?;
        let flat = g.reshape(col, vec![j, c])?;
        let out = g.dense(flat, w, Some(b))?;
        columns.push(g.reshape(out, vec![j, d_out, 1])?);
    }
    Ok(g.concat(&columns, 2)?)
}

/// Permutes each row of a `(J, K)` bit tensor.
fn permute_bit_rows(bits: &Tensor, il: &Interleaver) -> Result<Tensor, NeuralError> {
    let (j, k) = (bits.shape()[0], bits.shape()[1]);
    if il.len() != k {
        return Err(NeuralError::Shape(format!(
            "interleaver length {} does not match block length {k}",
            il.len()
        )));
    }
    let mut out = Vec::with_capacity(j * k);
    for row in bits.data().chunks_exact(k) {
        out.extend(il.perm().iter().map(|&p| row[p]));
    }
    Ok(Tensor::new(vec![j, k], out)?)
}

/// Codeword deltas caused by flipping a single message bit, with a
/// per-branch summary of how far the change spreads.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationResponse {
    /// `c(b*) - c(0)` over the `3K` codeword positions of user 1.
    pub delta: Vec<f64>,
    /// Count of positions per branch with `|delta| > tau`.
    pub branch_support: [usize; 3],
    /// Position of the largest `|delta|` per branch.
    pub branch_peak: [usize; 3],
    pub tau: f64,
    pub bit_position: usize,
    pub block_len: usize,
}

pub const PERTURBATION_TAU: f64 = 0.05;

/// Encodes the all-zeros block and the block with a single one at
/// `position` under frozen statistics and reports the codeword delta.
pub fn perturbation_response_at(
    model: &AutoencoderModel,
    k: usize,
    position: usize,
    tau: f64,
) -> Result<PerturbationResponse, NeuralError> {
    if k < 3 {
        return Err(NeuralError::Shape(format!(
            "perturbation analysis needs K >= 3, got {k}"
        )));
    }
    if position >= k {
        return Err(NeuralError::Shape(format!(
            "bit position {position} outside block of length {k}"
        )));
    }
    let zeros = Tensor::zeros(vec![1, k]);
    let mut one = Tensor::zeros(vec![1, k]);
    one.data_mut()[position] = 1.0;
    let base = model.encode_frozen(User::One, &zeros)?;
    let spike = model.encode_frozen(User::One, &one)?;
    let delta: Vec<f64> = spike.iter().zip(&base).map(|(a, b)| a - b).collect();
    let mut branch_support = [0usize; 3];
    let mut branch_peak = [0usize; 3];
    for branch in 0..3 {
        let seg = &delta[branch * k..(branch + 1) * k];
        branch_support[branch] = seg.iter().filter(|d| d.abs() > tau).count();
        branch_peak[branch] = seg
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
    }
    Ok(PerturbationResponse {
        delta,
        branch_support,
        branch_peak,
        tau,
        bit_position: position,
        block_len: k,
    })
}

/// The paper's probe: all zeros except a one at the middle position.
pub fn perturbation_response(
    model: &AutoencoderModel,
    k: usize,
) -> Result<PerturbationResponse, NeuralError> {
    perturbation_response_at(model, k, k / 2, PERTURBATION_TAU)
}
