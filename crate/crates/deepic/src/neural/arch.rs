//! Architecture descriptors for the learned codes.
//!
//! Nothing here is hidden: every width, kernel, feature size, and
//! iteration count that shapes a model is a named field with a serde
//! default, and the whole block is stored in checkpoints.

use serde::{Deserialize, Serialize};

/// Which autoencoder family to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    /// Three parallel encoder CNN branches with the iterative two-block
    /// decoder.
    Deepic,
    /// Same, with branch 3 fed through an interleaver and the decoder
    /// exchanging permuted posteriors.
    DeepicInterleaved,
    /// Single-branch CNN encoder/decoder pair without iterations.
    CnnAe,
    /// Bidirectional GRU encoder/decoder with per-position heads.
    RnnAe,
    /// Dense layers over the whole block.
    FfAe,
}

impl VariantKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VariantKind::Deepic => "deepic",
            VariantKind::DeepicInterleaved => "deepic_interleaved",
            VariantKind::CnnAe => "cnn_ae",
            VariantKind::RnnAe => "rnn_ae",
            VariantKind::FfAe => "ff_ae",
        }
    }
}

/// How power-normalization statistics are pooled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// One scalar mean/std per branch over the whole batch-by-position
    /// extent.
    #[default]
    BranchScalar,
    /// A per-position vector per branch, pooled over the batch only.
    PositionVector,
}

/// Every knob that shapes a model, with the defaults used throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    /// Message block length the model is built for. CNN variants stay
    /// length-agnostic; dense and interleaved variants are tied to it.
    pub block_len: usize,
    /// Convolution layers per encoder branch (before the 1-wide
    /// projection to one output channel).
    pub enc_layers: usize,
    pub enc_channels: usize,
    pub enc_kernel: usize,
    /// Convolution layers per decoder block, the last mapping to the
    /// feature width.
    pub dec_layers: usize,
    pub dec_channels: usize,
    pub dec_kernel: usize,
    /// Information feature size F exchanged between decoder blocks.
    pub feature_size: usize,
    /// Decoder iterations I.
    pub dec_iterations: usize,
    /// Give each decoder iteration its own block weights instead of
    /// sharing one pair across iterations.
    pub per_iteration_weights: bool,
    pub norm_mode: NormMode,
    /// Floor applied to the normalization standard deviation.
    pub norm_epsilon: f64,
    /// Hidden width of each GRU direction (RNN variant).
    pub rnn_hidden: usize,
    pub rnn_layers: usize,
    /// Hidden widths of the dense stack (feedforward variant).
    pub ff_hidden: Vec<usize>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            block_len: 100,
            enc_layers: 2,
            enc_channels: 64,
            enc_kernel: 5,
            dec_layers: 5,
            dec_channels: 64,
            dec_kernel: 5,
            feature_size: 5,
            dec_iterations: 6,
            per_iteration_weights: false,
            norm_mode: NormMode::BranchScalar,
            norm_epsilon: 1e-6,
            rnn_hidden: 64,
            rnn_layers: 2,
            ff_hidden: vec![128],
        }
    }
}

impl ArchConfig {
    /// A deliberately small configuration for unit tests.
    pub fn tiny(block_len: usize) -> Self {
        Self {
            block_len,
            enc_channels: 6,
            dec_channels: 8,
            feature_size: 3,
            dec_iterations: 2,
            rnn_hidden: 5,
            rnn_layers: 1,
            ff_hidden: vec![16],
            ..Self::default()
        }
    }

    /// Positions an encoder branch can reach from one input: the
    /// receptive radius times two plus one.
    pub fn encoder_receptive_field(&self) -> usize {
        // enc_layers kernels of width `enc_kernel` plus the 1-wide
        // projection layer.
        self.enc_layers * (self.enc_kernel - 1) + 1
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.block_len == 0 {
            return Err("block_len must be positive".into());
        }
        if self.feature_size == 0 || self.dec_iterations == 0 {
            return Err("feature_size and dec_iterations must be at least 1".into());
        }
        if self.enc_kernel.is_multiple_of(2) || self.dec_kernel.is_multiple_of(2) {
            return Err("convolution kernels must have odd width".into());
        }
        if self.enc_layers == 0 || self.dec_layers < 2 {
            return Err("need at least 1 encoder and 2 decoder conv layers".into());
        }
        if self.norm_epsilon <= 0.0 {
            return Err("norm_epsilon must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(ArchConfig::default().validate().is_ok());
        assert!(ArchConfig::tiny(16).validate().is_ok());
    }

    #[test]
    fn even_kernel_rejected() {
        let a = ArchConfig {
            enc_kernel: 4,
            ..ArchConfig::default()
        };
        assert!(a.validate().is_err());
    }

    #[test]
    fn receptive_field_default() {
        // Two width-5 layers reach 4 positions either side of center.
        assert_eq!(ArchConfig::default().encoder_receptive_field(), 9);
    }
}
