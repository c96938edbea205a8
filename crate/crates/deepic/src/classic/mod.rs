//! Classic baseline stack: convolutional codes with Viterbi decoding,
//! rate-1/3 Turbo codes with iterative BCJR decoding, BPSK/4-PAM
//! mapping, and the TD / TIN interference schemes.

mod bcjr;
mod convcode;
mod modulation;
mod schemes;
mod turbo;
mod viterbi;

use thiserror::Error;

pub use bcjr::{bcjr_decode, log_sum_exp, BcjrOutput};
pub use convcode::ConvCode;
pub use modulation::{Constellation, LLR_CLAMP};
pub use schemes::{TdPowerPolicy, TdScheme, TinScheme, TurboP2p};
pub use turbo::{hard_decisions, TurboChannelLlrs, TurboCode, TurboCodeword};
pub use viterbi::viterbi_decode;

#[derive(Debug, Error)]
pub enum ClassicError {
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("input length {got} does not fit {per_step} units per step")]
    BadLength { got: usize, per_step: usize },
    #[error("non-finite LLR at index {0}")]
    NonFiniteLlr(usize),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}
