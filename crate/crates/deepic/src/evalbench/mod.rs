//! Monte-Carlo BER/BLER estimation with confidence intervals, SNR
//! sweeps, block-length generalization, and perturbation reports.

mod ber;
pub mod schemes;
mod study;
mod sweep;

use thiserror::Error;

use crate::channel::ChannelParams;

/// Two users' per-block payloads: one `Vec` row per block.
pub type BitBatchPair = (Vec<Vec<u8>>, Vec<Vec<u8>>);
/// Two users' per-block symbol vectors.
pub type SymbolBatchPair = (Vec<Vec<f64>>, Vec<Vec<f64>>);

pub use ber::{ci_overlap, estimate_ber, point_seed, wilson_half_width, BerPoint, StoppingRule};
pub use study::{
    blocklength_eval, perturbation_csv, perturbation_report, perturbation_summary_json,
    PerturbationReport, PERTURBATION_CSV_HEADER,
};
pub use sweep::{from_csv, sweep, to_csv, SweepSpec, BER_CSV_HEADER};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
    #[error(transparent)]
    Classic(#[from] crate::classic::ClassicError),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Graph(#[from] crate::ndgrad::GraphError),
}

/// Anything that can carry two users' blocks over the interference
/// channel: encode both messages to equal-length symbol vectors, then
/// decide both messages from the received vectors.
///
/// The channel itself (`y1 = c1 + h*c2 + z1`, mirrored for user 2) is
/// applied by the bench between the two calls, so every scheme faces
/// the identical medium.
pub trait Scheme: Sync {
    fn scheme_id(&self) -> String;

    /// Neural variants report their family here; classic schemes `"-"`.
    fn variant_id(&self) -> String {
        "-".into()
    }

    /// Message bits per block (K).
    fn message_len(&self) -> usize;

    /// Preferred simulation batch size. Fixed per scheme so run results
    /// are independent of the execution environment.
    fn batch_hint(&self) -> usize {
        32
    }

    fn encode_pair(&self, b1: &[Vec<u8>], b2: &[Vec<u8>])
        -> Result<SymbolBatchPair, EvalError>;

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        y2: &[Vec<f64>],
        params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError>;
}
