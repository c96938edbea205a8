//! Adapters exposing the learned and classic pipelines through one
//! encode-pair / decode-pair interface.

use std::sync::Mutex;

use rayon::prelude::*;

use crate::channel::{ChannelParams, SeededRng};
use crate::classic::{
    viterbi_decode, Constellation, ConvCode, TdScheme, TinScheme, TurboChannelLlrs, TurboCode,
};
use crate::ndgrad::Tensor;
use crate::neural::{AutoencoderModel, User};

use super::{BitBatchPair, EvalError, Scheme, SymbolBatchPair};

fn rows_to_tensor(rows: &[Vec<u8>], k: usize) -> Result<Tensor, EvalError> {
    let mut data = Vec::with_capacity(rows.len() * k);
    for r in rows {
        if r.len() != k {
            return Err(EvalError::Config(format!(
                "block of length {} in a batch of K = {k}",
                r.len()
            )));
        }
        data.extend(r.iter().map(|&b| b as f64));
    }
    Ok(Tensor::new(vec![rows.len(), k], data)?)
}

fn posteriors_to_bits(post: &[f64], j: usize, k: usize) -> Vec<Vec<u8>> {
    (0..j)
        .map(|row| {
            post[row * k..(row + 1) * k]
                .iter()
                .map(|&p| (p > 0.5) as u8)
                .collect()
        })
        .collect()
}

/// A trained (or deliberately untrained) autoencoder under frozen
/// statistics.
pub struct NeuralScheme<'a> {
    model: &'a AutoencoderModel,
    k: usize,
}

impl<'a> NeuralScheme<'a> {
    pub fn new(model: &'a AutoencoderModel) -> Self {
        Self {
            model,
            k: model.arch.block_len,
        }
    }

    /// Evaluates a length-agnostic model at a different block length.
    pub fn with_block_len(model: &'a AutoencoderModel, k: usize) -> Self {
        Self { model, k }
    }
}

impl Scheme for NeuralScheme<'_> {
    fn scheme_id(&self) -> String {
        "neural".into()
    }

    fn variant_id(&self) -> String {
        self.model.kind.as_str().into()
    }

    fn message_len(&self) -> usize {
        self.k
    }

    fn batch_hint(&self) -> usize {
        64
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        let t1 = rows_to_tensor(b1, self.k)?;
        let t2 = rows_to_tensor(b2, self.k)?;
        let c1 = self.model.encode_frozen(User::One, &t1)?;
        let c2 = self.model.encode_frozen(User::Two, &t2)?;
        let n = 3 * self.k;
        Ok((
            c1.chunks_exact(n).map(|c| c.to_vec()).collect(),
            c2.chunks_exact(n).map(|c| c.to_vec()).collect(),
        ))
    }

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        y2: &[Vec<f64>],
        _params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let j = y1.len();
        let flat1: Vec<f64> = y1.iter().flatten().copied().collect();
        let flat2: Vec<f64> = y2.iter().flatten().copied().collect();
        let p1 = self.model.decode_frozen(User::One, &flat1, j, self.k)?;
        let p2 = self.model.decode_frozen(User::Two, &flat2, j, self.k)?;
        Ok((
            posteriors_to_bits(&p1, j, self.k),
            posteriors_to_bits(&p2, j, self.k),
        ))
    }
}

/// Treating interference as noise: Turbo-coded BPSK on every slot.
pub struct TinAdapter(pub TinScheme);

impl Scheme for TinAdapter {
    fn scheme_id(&self) -> String {
        "tin".into()
    }

    fn message_len(&self) -> usize {
        self.0.code.message_len()
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        let enc = |rows: &[Vec<u8>]| -> Result<Vec<Vec<f64>>, EvalError> {
            rows.iter()
                .map(|b| self.0.encode_block(b).map_err(EvalError::from))
                .collect()
        };
        Ok((enc(b1)?, enc(b2)?))
    }

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        y2: &[Vec<f64>],
        params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let dec = |rows: &[Vec<f64>]| -> Result<Vec<Vec<u8>>, EvalError> {
            rows.par_iter()
                .map(|y| self.0.decode_block(y, params).map_err(EvalError::from))
                .collect()
        };
        Ok((dec(y1)?, dec(y2)?))
    }
}

/// Time division with Gray 4-PAM in disjoint half-frames.
pub struct TdAdapter(pub TdScheme);

impl Scheme for TdAdapter {
    fn scheme_id(&self) -> String {
        "td".into()
    }

    fn message_len(&self) -> usize {
        self.0.code.message_len()
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        let enc = |rows: &[Vec<u8>], user: usize| -> Result<Vec<Vec<f64>>, EvalError> {
            rows.iter()
                .map(|b| self.0.encode_block(b, user).map_err(EvalError::from))
                .collect()
        };
        Ok((enc(b1, 0)?, enc(b2, 1)?))
    }

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        y2: &[Vec<f64>],
        params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let dec = |rows: &[Vec<f64>], user: usize| -> Result<Vec<Vec<u8>>, EvalError> {
            rows.par_iter()
                .map(|y| self.0.decode_block(y, user, params).map_err(EvalError::from))
                .collect()
        };
        Ok((dec(y1, 0)?, dec(y2, 1)?))
    }
}

/// Turbo-coded BPSK decoded with true-noise LLRs (point-to-point
/// reference; run it at `h = 0`).
pub struct TurboP2pScheme {
    pub code: TurboCode,
}

impl Scheme for TurboP2pScheme {
    fn scheme_id(&self) -> String {
        "turbo_p2p".into()
    }

    fn message_len(&self) -> usize {
        self.code.message_len()
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        let enc = |rows: &[Vec<u8>]| -> Result<Vec<Vec<f64>>, EvalError> {
            rows.iter()
                .map(|b| {
                    let flat = self.code.encode(b)?.to_bits();
                    Ok(Constellation::Bpsk.modulate(&flat)?)
                })
                .collect()
        };
        Ok((enc(b1)?, enc(b2)?))
    }

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        y2: &[Vec<f64>],
        params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let var = params.sigma * params.sigma;
        let dec = |rows: &[Vec<f64>]| -> Result<Vec<Vec<u8>>, EvalError> {
            rows.par_iter()
                .map(|y| {
                    let llr = Constellation::Bpsk.demap_llrs(y, var)?;
                    let split = TurboChannelLlrs::from_flat(
                        &llr,
                        self.code.message_len(),
                        self.code.tail_steps(),
                    )?;
                    Ok(self.code.decode(&split)?)
                })
                .collect()
        };
        Ok((dec(y1)?, dec(y2)?))
    }
}

/// Convolutionally coded BPSK with Viterbi decoding (point-to-point
/// reference).
pub struct ConvP2pScheme {
    pub code: ConvCode,
    pub k: usize,
}

impl ConvP2pScheme {
    /// The default rate-1/3 memory-3 feedforward code.
    pub fn standard(k: usize) -> Result<Self, EvalError> {
        Ok(Self {
            code: ConvCode::feedforward_octal(&[13, 15, 17])?,
            k,
        })
    }
}

impl Scheme for ConvP2pScheme {
    fn scheme_id(&self) -> String {
        "conv_p2p".into()
    }

    fn message_len(&self) -> usize {
        self.k
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        let enc = |rows: &[Vec<u8>]| -> Result<Vec<Vec<f64>>, EvalError> {
            rows.iter()
                .map(|b| Ok(Constellation::Bpsk.modulate(&self.code.encode(b))?))
                .collect()
        };
        Ok((enc(b1)?, enc(b2)?))
    }

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        y2: &[Vec<f64>],
        _params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let dec = |rows: &[Vec<f64>]| -> Result<Vec<Vec<u8>>, EvalError> {
            rows.par_iter()
                .map(|y| Ok(viterbi_decode(&self.code, y)?))
                .collect()
        };
        Ok((dec(y1)?, dec(y2)?))
    }
}

/// Uncoded BPSK, the closed-form reference `BER = Q(1/sigma)` at `h = 0`.
pub struct UncodedBpsk {
    pub k: usize,
}

impl Scheme for UncodedBpsk {
    fn scheme_id(&self) -> String {
        "uncoded".into()
    }

    fn message_len(&self) -> usize {
        self.k
    }

    fn batch_hint(&self) -> usize {
        256
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        let enc = |rows: &[Vec<u8>]| -> Result<Vec<Vec<f64>>, EvalError> {
            rows.iter()
                .map(|b| Ok(Constellation::Bpsk.modulate(b)?))
                .collect()
        };
        Ok((enc(b1)?, enc(b2)?))
    }

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        y2: &[Vec<f64>],
        _params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let dec = |rows: &[Vec<f64>]| -> Vec<Vec<u8>> {
            rows.iter()
                .map(|y| y.iter().map(|&v| (v < 0.0) as u8).collect())
                .collect()
        };
        Ok((dec(y1), dec(y2)))
    }
}

/// Pipeline check: the decoder returns the transmitted bits verbatim, so
/// every error count must be zero.
pub struct OracleScheme {
    pub k: usize,
    stash: Mutex<BitBatchPair>,
}

impl OracleScheme {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            stash: Mutex::new((Vec::new(), Vec::new())),
        }
    }
}

impl Scheme for OracleScheme {
    fn scheme_id(&self) -> String {
        "oracle".into()
    }

    fn message_len(&self) -> usize {
        self.k
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        *self.stash.lock().unwrap() = (b1.to_vec(), b2.to_vec());
        let zeros = |rows: &[Vec<u8>]| rows.iter().map(|b| vec![0.0; b.len()]).collect();
        Ok((zeros(b1), zeros(b2)))
    }

    fn decode_pair(
        &self,
        _y1: &[Vec<f64>],
        _y2: &[Vec<f64>],
        _params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let stash = self.stash.lock().unwrap();
        Ok(stash.clone())
    }
}

/// Worst-case check: decisions are fair coin flips, so the measured BER
/// must sit at one half.
pub struct CoinFlipScheme {
    pub k: usize,
    rng: Mutex<SeededRng>,
}

impl CoinFlipScheme {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            rng: Mutex::new(SeededRng::new(seed, "coinflip")),
        }
    }
}

impl Scheme for CoinFlipScheme {
    fn scheme_id(&self) -> String {
        "coinflip".into()
    }

    fn message_len(&self) -> usize {
        self.k
    }

    fn encode_pair(
        &self,
        b1: &[Vec<u8>],
        b2: &[Vec<u8>],
    ) -> Result<SymbolBatchPair, EvalError> {
        let zeros = |rows: &[Vec<u8>]| rows.iter().map(|b| vec![0.0; b.len()]).collect();
        Ok((zeros(b1), zeros(b2)))
    }

    fn decode_pair(
        &self,
        y1: &[Vec<f64>],
        _y2: &[Vec<f64>],
        _params: &ChannelParams,
    ) -> Result<BitBatchPair, EvalError> {
        let mut rng = self.rng.lock().unwrap();
        let mut flip = |rows: usize| -> Vec<Vec<u8>> {
            (0..rows)
                .map(|_| {
                    let mut b = vec![0u8; self.k];
                    rng.fill_bits(&mut b);
                    b
                })
                .collect()
        };
        Ok((flip(y1.len()), flip(y1.len())))
    }
}
