//! Strict JSON run configuration. Unknown keys are rejected, every
//! field has a materialized default, and the resolved document is
//! echoed next to each run's outputs so it can reproduce the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use deepic::channel::NoiseCoupling;
use deepic::classic::{ConvCode, TdPowerPolicy, TurboCode};
use deepic::evalbench::StoppingRule;
use deepic::ndgrad::Precision;
use deepic::neural::{ArchConfig, VariantKind};
use deepic::trainer::{AlphaUpdate, NoisePolicy, TrainConfig, ValidationConfig};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub channel: ChannelSection,
    pub code: CodeSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub eval: StoppingRule,
    #[serde(default)]
    pub blocklength: BlocklengthSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Interference gains; training uses the first entry.
    pub h: Vec<f64>,
    /// Strictly increasing SNR grid in decibels.
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub coupling: NoiseCoupling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    /// Message block length K.
    pub k: usize,
    #[serde(default = "default_variant")]
    pub variant: VariantKind,
    #[serde(default)]
    pub arch: ArchConfig,
    #[serde(default)]
    pub turbo: TurboSection,
}

fn default_variant() -> VariantKind {
    VariantKind::Deepic
}

/// Classic Turbo-code construction knobs shared by TIN, TD, and the
/// point-to-point baseline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurboSection {
    /// Octal generators; the first is the feedback polynomial.
    pub generators: Vec<u64>,
    pub iterations: usize,
    /// Defaults to a value derived from the run seed.
    pub interleaver_seed: Option<u64>,
    /// Tail-bit termination of constituent 1.
    pub terminated: bool,
    pub td_power: TdPowerPolicy,
}

impl Default for TurboSection {
    fn default() -> Self {
        Self {
            generators: vec![13, 15],
            iterations: 6,
            interleaver_seed: None,
            terminated: true,
            td_power: TdPowerPolicy::EqualBlockEnergy,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub enc_steps: usize,
    pub dec_steps: usize,
    pub enc_noise: NoisePolicy,
    pub dec_noise: NoisePolicy,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    pub precision: Precision,
    pub alpha_update: AlphaUpdate,
    pub validation: ValidationConfig,
    pub ema_decay: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            enc_steps: t.enc_steps,
            dec_steps: t.dec_steps,
            enc_noise: t.enc_noise,
            dec_noise: t.dec_noise,
            learning_rate: t.learning_rate,
            clip_norm: t.clip_norm,
            precision: t.precision,
            alpha_update: t.alpha_update,
            validation: t.validation,
            ema_decay: t.ema_decay,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlocklengthSection {
    pub lengths: Vec<usize>,
    pub mode: BlocklengthMode,
}

impl Default for BlocklengthSection {
    fn default() -> Self {
        Self {
            lengths: vec![30, 60, 100],
            mode: BlocklengthMode::Eval,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlocklengthMode {
    /// Evaluate one length-agnostic checkpoint at every length.
    Eval,
    /// Train one model per length, then evaluate each.
    Train,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.channel.h.is_empty() {
            return Err(CliError::Config("channel.h must not be empty".into()));
        }
        if self.channel.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "channel.snr_db must be strictly increasing".into(),
            ));
        }
        if self.code.k == 0 {
            return Err(CliError::Config("code.k must be positive".into()));
        }
        Ok(())
    }

    /// Architecture with the block length forced to `code.k`.
    pub fn resolved_arch(&self) -> ArchConfig {
        let mut arch = self.code.arch.clone();
        arch.block_len = self.code.k;
        arch
    }

    /// Materializes the training configuration for this run.
    pub fn train_config(&self) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            enc_steps: t.enc_steps,
            dec_steps: t.dec_steps,
            enc_noise: t.enc_noise,
            dec_noise: t.dec_noise,
            learning_rate: t.learning_rate,
            clip_norm: t.clip_norm,
            seed: self.seed,
            h: self.channel.h[0],
            kind: self.code.variant,
            arch: self.resolved_arch(),
            precision: t.precision,
            alpha_update: t.alpha_update,
            noise_coupling: self.channel.coupling,
            validation: t.validation.clone(),
            ema_decay: t.ema_decay,
        }
    }

    /// Builds the configured Turbo code at block length `k`.
    pub fn turbo_code(&self, k: usize) -> Result<TurboCode, CliError> {
        let spec = &self.code.turbo;
        let seed = spec
            .interleaver_seed
            .unwrap_or_else(|| deepic::channel::derive_seed(self.seed, &["turbo-interleaver"]));
        let constituent = ConvCode::recursive_octal(&spec.generators)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(TurboCode::new(k, seed)
            .map_err(|e| CliError::Config(e.to_string()))?
            .with_constituent(constituent)
            .map_err(|e| CliError::Config(e.to_string()))?
            .with_iterations(spec.iterations)
            .with_termination(spec.terminated))
    }

    /// The serialized, fully resolved document (defaults materialized).
    pub fn resolved_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

/// Plot request: input tables, grouping, axes, and the output path.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpecFile {
    pub inputs: Vec<PathBuf>,
    #[serde(default = "default_group_by")]
    pub group_by: Vec<String>,
    #[serde(default = "default_x")]
    pub x: String,
    #[serde(default = "default_y")]
    pub y: String,
    #[serde(default = "default_true")]
    pub log_y: bool,
    pub output: PathBuf,
    #[serde(default)]
    pub title: String,
    #[serde(default = "default_x_label")]
    pub x_label: String,
    #[serde(default = "default_y_label")]
    pub y_label: String,
}

fn default_group_by() -> Vec<String> {
    vec!["scheme".into(), "variant".into(), "h".into()]
}

fn default_x() -> String {
    "snr_db".into()
}

fn default_y() -> String {
    "ber_avg".into()
}

fn default_true() -> bool {
    true
}

fn default_x_label() -> String {
    "SNR (dB)".into()
}

fn default_y_label() -> String {
    "BER".into()
}

impl PlotSpecFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
