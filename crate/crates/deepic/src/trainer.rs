//! Joint end-to-end training of both users' encoder/decoder pairs.
//!
//! Each epoch runs two phases: the encoder phase updates only encoder
//! parameters for a fixed number of steps at the encoder noise level,
//! then the decoder phase updates only decoder parameters at its own
//! noise level. Every step draws fresh messages and noise, forms the
//! weighted loss `L = alpha*L1 + beta*L2`, and afterwards re-balances
//! the weights to `alpha = L1/(L1+L2)`, `beta = 1 - alpha`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{derive_seed, snr_to_sigma, NoiseCoupling, SeededRng};
use crate::evalbench::{estimate_ber, schemes::NeuralScheme, StoppingRule};
use crate::ndgrad::{
    clip_global_norm, AdamConfig, AdamOptimizer, Graph, GraphError, NodeId, Precision, Tensor,
};
use crate::neural::{
    build_variant, ArchConfig, AutoencoderModel, Bindings, BranchStat, NeuralError, StatsEma,
    StatsMode, User, VariantKind,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, {phase} step {step}: {source}")]
    NonFinite {
        epoch: usize,
        phase: Phase,
        step: usize,
        source: GraphError,
    },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] crate::evalbench::EvalError),
}

/// Noise level of a training phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePolicy {
    /// Fixed linear standard deviation.
    Sigma(f64),
    /// Fixed SNR in decibels.
    SnrDb(f64),
    /// SNR drawn uniformly per batch from `[lo, hi]` decibels.
    SnrRangeDb { lo: f64, hi: f64 },
}

impl NoisePolicy {
    fn sample_sigma(&self, rng: &mut SeededRng) -> f64 {
        match *self {
            NoisePolicy::Sigma(s) => s,
            NoisePolicy::SnrDb(db) => snr_to_sigma(db),
            NoisePolicy::SnrRangeDb { lo, hi } => snr_to_sigma(rng.uniform(lo, hi)),
        }
    }
}

/// When the loss weights are re-balanced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaUpdate {
    /// After every optimizer step, from that step's raw losses.
    #[default]
    PerStep,
    /// Once per epoch, from the epoch's mean losses.
    PerEpoch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    pub snr_db: f64,
    pub blocks: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            snr_db: 3.0,
            blocks: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub enc_steps: usize,
    pub dec_steps: usize,
    pub enc_noise: NoisePolicy,
    pub dec_noise: NoisePolicy,
    pub learning_rate: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
    pub h: f64,
    pub kind: VariantKind,
    pub arch: ArchConfig,
    pub precision: Precision,
    pub alpha_update: AlphaUpdate,
    pub noise_coupling: NoiseCoupling,
    pub validation: ValidationConfig,
    /// Decay of the moving average that freezes normalization statistics.
    pub ema_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 500,
            enc_steps: 100,
            dec_steps: 500,
            enc_noise: NoisePolicy::SnrDb(2.0),
            dec_noise: NoisePolicy::SnrRangeDb { lo: 0.0, hi: 6.0 },
            learning_rate: 1e-4,
            clip_norm: Some(1.0),
            seed: 0,
            h: 0.8,
            kind: VariantKind::Deepic,
            arch: ArchConfig::default(),
            precision: Precision::F64,
            alpha_update: AlphaUpdate::default(),
            noise_coupling: NoiseCoupling::Independent,
            validation: ValidationConfig::default(),
            ema_decay: 0.99,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs < 1 || self.enc_steps < 1 || self.dec_steps < 1 {
            return Err(TrainError::Config(
                "epochs, enc_steps, and dec_steps must all be at least 1".into(),
            ));
        }
        if self.batch_size < 2 {
            return Err(TrainError::Config(
                "batch_size must be at least 2 for batch normalization".into(),
            ));
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return Err(TrainError::Config("ema_decay must lie in (0, 1)".into()));
        }
        self.arch.validate().map_err(TrainError::Config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Encoder,
    Decoder,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Encoder => "enc",
            Phase::Decoder => "dec",
        }
    }

    /// Substring of the parameter names this phase updates.
    fn name_marker(&self) -> &'static str {
        match self {
            Phase::Encoder => ".enc.",
            Phase::Decoder => ".dec.",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub step: usize,
    pub l1: f64,
    pub l2: f64,
    pub l: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    pub records: Vec<StepRecord>,
    /// Total training wall time, set when a run finishes.
    pub wall_clock_secs: f64,
}

pub const TRAINLOG_CSV_HEADER: &str = "epoch,phase,step,L1,L2,L,alpha,beta";

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAINLOG_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.epoch, r.phase, r.step, r.l1, r.l2, r.l, r.alpha, r.beta
            );
        }
        out
    }

    /// Mean combined loss of one epoch.
    pub fn epoch_mean_loss(&self, epoch: usize) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for r in self.records.iter().filter(|r| r.epoch == epoch) {
            sum += r.l;
            n += 1;
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// The fully built two-user loss graph of one batch.
pub struct LossGraph {
    pub graph: Graph,
    pub bindings: Bindings,
    pub l1: NodeId,
    pub l2: NodeId,
    pub loss: NodeId,
    pub stats_u1: Vec<BranchStat>,
    pub stats_u2: Vec<BranchStat>,
}

/// Builds `L1 = BCE(b1, dec1(c1 + h*c2 + z1))` and the mirrored `L2`
/// over one shared batch, plus the weighted sum used for the update.
#[allow(clippy::too_many_arguments)]
pub fn compute_losses(
    model: &AutoencoderModel,
    b1: &Tensor,
    b2: &Tensor,
    z1: &Tensor,
    z2: &Tensor,
    h: f64,
    alpha: f64,
    beta: f64,
    precision: Precision,
) -> Result<LossGraph, TrainError> {
    let mut g = Graph::with_precision(precision);
    let bindings = model.bind(&mut g, true)?;
    let (j, k) = (b1.shape()[0], b1.shape()[1]);

    let enc1 = model.encode_graph(&mut g, &bindings, User::One, b1, StatsMode::Batch)?;
    let enc2 = model.encode_graph(&mut g, &bindings, User::Two, b2, StatsMode::Batch)?;

    let z1 = g.input(z1.clone())?;
    let z2 = g.input(z2.clone())?;
    let cross1 = g.scale(enc2.codeword, h)?;
    let mix1 = g.add(enc1.codeword, cross1)?;
    let rx1 = g.add(mix1, z1)?;
    let cross2 = g.scale(enc1.codeword, h)?;
    let mix2 = g.add(enc2.codeword, cross2)?;
    let rx2 = g.add(mix2, z2)?;

    let logits1 = model.decode_graph(&mut g, &bindings, User::One, rx1)?;
    let logits2 = model.decode_graph(&mut g, &bindings, User::Two, rx2)?;
    let t1 = g.input(b1.reshaped(vec![j, 1, k])?)?;
    let t2 = g.input(b2.reshaped(vec![j, 1, k])?)?;
    let l1 = g.bce_with_logits(logits1, t1)?;
    let l2 = g.bce_with_logits(logits2, t2)?;
    let w1 = g.scale(l1, alpha)?;
    let w2 = g.scale(l2, beta)?;
    let loss = g.add(w1, w2)?;

    Ok(LossGraph {
        graph: g,
        bindings,
        l1,
        l2,
        loss,
        stats_u1: enc1.batch_stats.expect("batch mode returns stats"),
        stats_u2: enc2.batch_stats.expect("batch mode returns stats"),
    })
}

/// Loss-weight state shared by both phases.
#[derive(Clone, Copy, Debug)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
        }
    }
}

impl LossWeights {
    fn rebalance(&mut self, l1: f64, l2: f64) {
        let total = l1 + l2;
        if total > 0.0 {
            self.alpha = l1 / total;
            self.beta = l2 / total;
        }
    }
}

/// Runs one phase: `steps` optimizer updates restricted to the phase's
/// parameters, with fresh messages and noise each step.
#[allow(clippy::too_many_arguments)]
pub fn train_phase(
    model: &mut AutoencoderModel,
    config: &TrainConfig,
    epoch: usize,
    phase: Phase,
    weights: &mut LossWeights,
    optimizer: &mut AdamOptimizer,
    ema: &mut StatsEma,
    history: &mut TrainHistory,
) -> Result<(), TrainError> {
    let (steps, policy) = match phase {
        Phase::Encoder => (config.enc_steps, config.enc_noise),
        Phase::Decoder => (config.dec_steps, config.dec_noise),
    };
    let (j, k) = (config.batch_size, config.arch.block_len);
    let mut epoch_l1 = 0.0;
    let mut epoch_l2 = 0.0;

    for step in 1..=steps {
        let step_seed = derive_seed(
            config.seed,
            &[
                "train",
                &format!("e{epoch}"),
                phase.as_str(),
                &format!("s{step}"),
            ],
        );
        let mut bits1 = SeededRng::new(step_seed, "bits/u1");
        let mut bits2 = SeededRng::new(step_seed, "bits/u2");
        let mut sigma_rng = SeededRng::new(step_seed, "sigma");
        let mut noise1 = SeededRng::new(step_seed, "noise/u1");
        let mut noise2 = SeededRng::new(step_seed, "noise/u2");

        let draw_bits = |rng: &mut SeededRng| -> Tensor {
            let mut raw = vec![0u8; j * k];
            rng.fill_bits(&mut raw);
            Tensor::new(vec![j, k], raw.iter().map(|&b| b as f64).collect())
                .expect("bit tensor shape")
        };
        let b1 = draw_bits(&mut bits1);
        let b2 = draw_bits(&mut bits2);
        let sigma = policy.sample_sigma(&mut sigma_rng);
        let mut z1 = Tensor::zeros(vec![j, 3, k]);
        noise1.fill_gaussian(z1.data_mut());
        for v in z1.data_mut() {
            *v *= sigma;
        }
        let z2 = match config.noise_coupling {
            NoiseCoupling::Independent => {
                let mut z = Tensor::zeros(vec![j, 3, k]);
                noise2.fill_gaussian(z.data_mut());
                for v in z.data_mut() {
                    *v *= sigma;
                }
                z
            }
            NoiseCoupling::Shared => z1.clone(),
        };

        let mut lg = compute_losses(
            model,
            &b1,
            &b2,
            &z1,
            &z2,
            config.h,
            weights.alpha,
            weights.beta,
            config.precision,
        )
        .map_err(|e| step_error(e, epoch, phase, step))?;

        let l1v = lg.graph.value(lg.l1).item();
        let l2v = lg.graph.value(lg.l2).item();
        let lv = lg.graph.value(lg.loss).item();

        lg.graph
            .backward(lg.loss)
            .map_err(|e| step_error(e.into(), epoch, phase, step))?;

        let marker = phase.name_marker();
        let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();
        for (name, &id) in lg.bindings.iter() {
            if !name.contains(marker) {
                continue;
            }
            if let Some(grad) = lg.graph.grad(id) {
                grads.insert(name.clone(), grad.clone());
            }
        }
        if let Some(max_norm) = config.clip_norm {
            clip_global_norm(&mut grads, max_norm);
        }
        optimizer.step(&mut model.params, &grads)?;

        ema.update(User::One, &lg.stats_u1);
        ema.update(User::Two, &lg.stats_u2);

        epoch_l1 += l1v;
        epoch_l2 += l2v;
        if config.alpha_update == AlphaUpdate::PerStep {
            weights.rebalance(l1v, l2v);
        }
        history.records.push(StepRecord {
            epoch,
            phase,
            step,
            l1: l1v,
            l2: l2v,
            l: lv,
            alpha: weights.alpha,
            beta: weights.beta,
        });
    }

    if config.alpha_update == AlphaUpdate::PerEpoch && phase == Phase::Decoder {
        weights.rebalance(epoch_l1 / steps as f64, epoch_l2 / steps as f64);
    }
    Ok(())
}

fn step_error(e: TrainError, epoch: usize, phase: Phase, step: usize) -> TrainError {
    match e {
        TrainError::Graph(source) | TrainError::Neural(NeuralError::Graph(source)) => {
            TrainError::NonFinite {
                epoch,
                phase,
                step,
                source,
            }
        }
        other => other,
    }
}

/// Per-user BER of a frozen model at one operating point, over a fixed
/// number of blocks.
pub fn validate(
    model: &AutoencoderModel,
    snr_db: f64,
    h: f64,
    blocks: u64,
    seed: u64,
) -> Result<(f64, f64), TrainError> {
    let scheme = NeuralScheme::new(model);
    let stop = StoppingRule {
        min_errors: u64::MAX,
        max_blocks: blocks,
    };
    let point = estimate_ber(&scheme, h, snr_db, &stop, seed)?;
    Ok((point.ber_user1, point.ber_user2))
}

/// Everything a finished (or aborted) run hands back.
pub struct TrainOutcome {
    /// Checkpoint with the best validation BER.
    pub best: AutoencoderModel,
    /// State after the final epoch.
    pub last: AutoencoderModel,
    pub history: TrainHistory,
    /// `(epoch, average BER)` of the selected checkpoint.
    pub best_val: Option<(usize, f64)>,
    /// Set when training stopped early on a numeric failure; the models
    /// are then the last good epoch snapshot.
    pub aborted: Option<String>,
}

/// Observer invoked at each epoch boundary with the frozen snapshot and
/// its validation BERs.
pub type EpochObserver<'a> = dyn FnMut(usize, &AutoencoderModel, (f64, f64)) + 'a;

pub fn train(config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_observed(config, &mut |_, _, _| {})
}

pub fn train_observed(
    config: &TrainConfig,
    observer: &mut EpochObserver<'_>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let started = std::time::Instant::now();
    let mut model = build_variant(config.kind, &config.arch, config.seed)?;
    let mut optimizer = AdamOptimizer::new(
        AdamConfig::with_lr(config.learning_rate),
        config.precision,
    );
    let mut ema = StatsEma::new(config.ema_decay);
    let mut weights = LossWeights::default();
    let mut history = TrainHistory::default();

    let mut best: Option<(usize, f64, AutoencoderModel)> = None;
    let mut last_good: Option<AutoencoderModel> = None;

    for epoch in 1..=config.epochs {
        if epoch == config.epochs {
            // Frozen statistics must reflect converged parameters only.
            ema.reset();
        }
        let mut run = || -> Result<(), TrainError> {
            train_phase(
                &mut model,
                config,
                epoch,
                Phase::Encoder,
                &mut weights,
                &mut optimizer,
                &mut ema,
                &mut history,
            )?;
            train_phase(
                &mut model,
                config,
                epoch,
                Phase::Decoder,
                &mut weights,
                &mut optimizer,
                &mut ema,
                &mut history,
            )
        };
        if let Err(e) = run() {
            let fallback = last_good.clone().unwrap_or_else(|| model.clone());
            return Ok(TrainOutcome {
                best: best.map(|(_, _, m)| m).unwrap_or_else(|| fallback.clone()),
                last: fallback,
                history,
                best_val: None,
                aborted: Some(e.to_string()),
            });
        }

        let mut snapshot = model.clone();
        snapshot.frozen = ema.snapshot();
        let val_seed = derive_seed(config.seed, &["validate", &format!("e{epoch}")]);
        let (ber1, ber2) = validate(
            &snapshot,
            config.validation.snr_db,
            config.h,
            config.validation.blocks,
            val_seed,
        )?;
        let avg = 0.5 * (ber1 + ber2);
        observer(epoch, &snapshot, (ber1, ber2));
        if best.as_ref().is_none_or(|(_, b, _)| avg < *b) {
            best = Some((epoch, avg, snapshot.clone()));
        }
        last_good = Some(snapshot);
    }

    history.wall_clock_secs = started.elapsed().as_secs_f64();
    let last = last_good.expect("at least one epoch ran");
    let (best_epoch, best_ber, best_model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        best: best_model,
        last,
        history,
        best_val: Some((best_epoch, best_ber)),
        aborted: None,
    })
}
