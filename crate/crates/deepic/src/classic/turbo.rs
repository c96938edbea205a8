//! Rate-1/3 Turbo code: two recursive systematic constituents coupled
//! through an interleaver, decoded by iterative extrinsic exchange.

#![allow(clippy::needless_range_loop)]

use crate::interleaver::Interleaver;

use super::bcjr::{bcjr_decode, BcjrOutput};
use super::convcode::ConvCode;
use super::ClassicError;

/// Parallel-concatenated code descriptor.
///
/// Constituent 1 is terminated with tail bits; constituent 2 runs open,
/// the classic arrangement. Before termination overhead the code maps
/// `K` message bits to `3K` coded bits (systematic + two parity
/// streams); the `2m` tail bits are transmitted beyond that and their
/// energy counts against the power budget.
#[derive(Clone, Debug)]
pub struct TurboCode {
    constituent: ConvCode,
    interleaver: Interleaver,
    iterations: usize,
    terminated: bool,
}

/// Encoder output split into its streams.
#[derive(Clone, Debug)]
pub struct TurboCodeword {
    pub systematic: Vec<u8>,
    pub parity1: Vec<u8>,
    pub parity2: Vec<u8>,
    /// Tail pairs of constituent 1, `(systematic, parity)` per step.
    pub tail: Vec<(u8, u8)>,
}

impl TurboCodeword {
    /// Serializes as `systematic || parity1 || parity2 || tail pairs`.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.systematic);
        out.extend_from_slice(&self.parity1);
        out.extend_from_slice(&self.parity2);
        for &(s, p) in &self.tail {
            out.push(s);
            out.push(p);
        }
        out
    }

    pub fn len(&self) -> usize {
        3 * self.systematic.len() + 2 * self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systematic.is_empty()
    }
}

/// Per-bit channel LLRs in the same stream layout as [`TurboCodeword`].
#[derive(Clone, Debug)]
pub struct TurboChannelLlrs {
    pub systematic: Vec<f64>,
    pub parity1: Vec<f64>,
    pub parity2: Vec<f64>,
    pub tail: Vec<(f64, f64)>,
}

impl TurboChannelLlrs {
    /// Splits a flat LLR vector laid out like [`TurboCodeword::to_bits`].
    pub fn from_flat(llrs: &[f64], k: usize, tail_steps: usize) -> Result<Self, ClassicError> {
        if llrs.len() != 3 * k + 2 * tail_steps {
            return Err(ClassicError::BadLength {
                got: llrs.len(),
                per_step: 3,
            });
        }
        let tail = (0..tail_steps)
            .map(|i| (llrs[3 * k + 2 * i], llrs[3 * k + 2 * i + 1]))
            .collect();
        Ok(Self {
            systematic: llrs[..k].to_vec(),
            parity1: llrs[k..2 * k].to_vec(),
            parity2: llrs[2 * k..3 * k].to_vec(),
            tail,
        })
    }
}

impl TurboCode {
    /// Standard construction: memory-3 constituents with feedback 13 and
    /// parity 15 (octal), a seeded uniform interleaver of length `k`,
    /// and six decoding iterations.
    pub fn new(k: usize, interleaver_seed: u64) -> Result<Self, ClassicError> {
        let constituent = ConvCode::recursive_octal(&[13, 15])?;
        Ok(Self {
            constituent,
            interleaver: Interleaver::random(k, interleaver_seed),
            iterations: 6,
            terminated: true,
        })
    }

    pub fn with_constituent(mut self, code: ConvCode) -> Result<Self, ClassicError> {
        if !code.is_recursive() {
            return Err(ClassicError::InvalidCode(
                "turbo constituent must be recursive systematic".into(),
            ));
        }
        if code.outputs_per_step() != 2 {
            return Err(ClassicError::InvalidCode(
                "turbo constituent must be rate 1/2".into(),
            ));
        }
        self.constituent = code;
        Ok(self)
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations.max(1);
        self
    }

    pub fn with_interleaver(mut self, interleaver: Interleaver) -> Self {
        self.interleaver = interleaver;
        self
    }

    /// Whether constituent 1 is driven back to the zero state with tail
    /// bits. Constituent 2 always runs open.
    pub fn with_termination(mut self, terminated: bool) -> Self {
        self.terminated = terminated;
        self
    }

    pub fn message_len(&self) -> usize {
        self.interleaver.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    pub fn tail_steps(&self) -> usize {
        if self.terminated {
            self.constituent.memory()
        } else {
            0
        }
    }

    /// Transmitted bit count: `3K` plus the tail overhead.
    pub fn coded_len(&self) -> usize {
        3 * self.message_len() + 2 * self.tail_steps()
    }

    pub fn encode(&self, bits: &[u8]) -> Result<TurboCodeword, ClassicError> {
        let k = self.message_len();
        if bits.len() != k {
            return Err(ClassicError::BadLength {
                got: bits.len(),
                per_step: k,
            });
        }
        let c1 = self.constituent.clone().with_termination(self.terminated);
        let coded1 = c1.encode(bits);
        let mut systematic = Vec::with_capacity(k);
        let mut parity1 = Vec::with_capacity(k);
        for t in 0..k {
            systematic.push(coded1[2 * t]);
            parity1.push(coded1[2 * t + 1]);
        }
        let tail = (0..c1.tail_steps())
            .map(|i| (coded1[2 * (k + i)], coded1[2 * (k + i) + 1]))
            .collect();

        let c2 = self.constituent.clone().with_termination(false);
        let permuted = self.interleaver.interleave(bits);
        let coded2 = c2.encode(&permuted);
        let parity2 = (0..k).map(|t| coded2[2 * t + 1]).collect();

        Ok(TurboCodeword {
            systematic,
            parity1,
            parity2,
            tail,
        })
    }

    /// Iterative decoding: alternating BCJR passes exchange extrinsic
    /// information through the interleaver; hard decisions come from the
    /// final posterior of the second constituent, de-interleaved.
    pub fn decode(&self, llrs: &TurboChannelLlrs) -> Result<Vec<u8>, ClassicError> {
        Ok(hard_decisions(&self.decode_posterior(llrs)?))
    }

    /// Posterior LLR per message bit after the configured iterations.
    pub fn decode_posterior(&self, llrs: &TurboChannelLlrs) -> Result<Vec<f64>, ClassicError> {
        self.decode_posterior_iters(llrs, self.iterations)
    }

    pub fn decode_posterior_iters(
        &self,
        llrs: &TurboChannelLlrs,
        iterations: usize,
    ) -> Result<Vec<f64>, ClassicError> {
        let k = self.message_len();
        if llrs.systematic.len() != k || llrs.parity1.len() != k || llrs.parity2.len() != k {
            return Err(ClassicError::BadLength {
                got: llrs.systematic.len(),
                per_step: k,
            });
        }
        let c1 = self.constituent.clone().with_termination(self.terminated);
        let c2 = self.constituent.clone().with_termination(false);
        if llrs.tail.len() != c1.tail_steps() {
            return Err(ClassicError::BadLength {
                got: llrs.tail.len(),
                per_step: c1.tail_steps(),
            });
        }

        let mut ch1 = Vec::with_capacity(2 * (k + c1.tail_steps()));
        for t in 0..k {
            ch1.push(llrs.systematic[t]);
            ch1.push(llrs.parity1[t]);
        }
        for &(s, p) in &llrs.tail {
            ch1.push(s);
            ch1.push(p);
        }
        let sys_perm = self.interleaver.interleave(&llrs.systematic);
        let mut ch2 = Vec::with_capacity(2 * k);
        for t in 0..k {
            ch2.push(sys_perm[t]);
            ch2.push(llrs.parity2[t]);
        }

        let mut ext2_deint = vec![0.0; k];
        let mut out2: Option<BcjrOutput> = None;
        for _ in 0..iterations.max(1) {
            let out1 = bcjr_decode(&c1, &ch1, &ext2_deint)?;
            let prior2 = self.interleaver.interleave(&out1.extrinsic);
            let o2 = bcjr_decode(&c2, &ch2, &prior2)?;
            ext2_deint = self.interleaver.deinterleave(&o2.extrinsic);
            out2 = Some(o2);
        }
        let posterior = self
            .interleaver
            .deinterleave(&out2.expect("at least one iteration").posterior);
        Ok(posterior)
    }
}

/// Sign decision under the `ln(P0/P1)` convention; ties favor bit 0.
pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| (l < 0.0) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SeededRng;
    use crate::classic::modulation::Constellation;

    #[test]
    fn all_zero_message_yields_all_zero_streams() {
        let code = TurboCode::new(40, 7).unwrap();
        let cw = code.encode(&[0; 40]).unwrap();
        assert!(cw.systematic.iter().all(|&b| b == 0));
        assert!(cw.parity1.iter().all(|&b| b == 0));
        assert!(cw.parity2.iter().all(|&b| b == 0));
        assert!(cw.tail.iter().all(|&(s, p)| s == 0 && p == 0));
    }

    #[test]
    fn systematic_stream_equals_message() {
        let code = TurboCode::new(64, 3).unwrap();
        let mut rng = SeededRng::new(40, "turbo-sys");
        let msg: Vec<u8> = (0..64).map(|_| rng.next_bit()).collect();
        let cw = code.encode(&msg).unwrap();
        assert_eq!(cw.systematic, msg);
        assert_eq!(cw.len(), 3 * 64 + 2 * code.tail_steps());
    }

    #[test]
    fn parity2_is_parity1_of_interleaved_message() {
        let code = TurboCode::new(48, 5).unwrap();
        let mut rng = SeededRng::new(41, "turbo-p2");
        let msg: Vec<u8> = (0..48).map(|_| rng.next_bit()).collect();
        let cw = code.encode(&msg).unwrap();
        // Encode the permuted message through an open constituent and
        // compare its parity to parity2.
        let permuted = code.interleaver().interleave(&msg);
        let open = ConvCode::recursive_octal(&[13, 15])
            .unwrap()
            .with_termination(false);
        let coded = open.encode(&permuted);
        let expect: Vec<u8> = (0..48).map(|t| coded[2 * t + 1]).collect();
        assert_eq!(cw.parity2, expect);
    }

    #[test]
    fn zero_noise_roundtrip_is_exact() {
        let code = TurboCode::new(60, 11).unwrap();
        let mut rng = SeededRng::new(42, "turbo-rt");
        for _ in 0..10 {
            let msg: Vec<u8> = (0..60).map(|_| rng.next_bit()).collect();
            let flat = code.encode(&msg).unwrap().to_bits();
            let symbols = Constellation::Bpsk.modulate(&flat).unwrap();
            let llr = Constellation::Bpsk.demap_llrs(&symbols, 0.0).unwrap();
            let llrs = TurboChannelLlrs::from_flat(&llr, 60, code.tail_steps()).unwrap();
            assert_eq!(code.decode(&llrs).unwrap(), msg);
        }
    }

    #[test]
    fn noisy_roundtrip_recovers_at_moderate_snr() {
        let code = TurboCode::new(100, 13).unwrap();
        let sigma = crate::channel::snr_to_sigma(2.0);
        let mut rng = SeededRng::new(43, "turbo-noisy");
        let mut bit_errors = 0usize;
        let mut bits = 0usize;
        for _ in 0..20 {
            let msg: Vec<u8> = (0..100).map(|_| rng.next_bit()).collect();
            let flat = code.encode(&msg).unwrap().to_bits();
            let mut symbols = Constellation::Bpsk.modulate(&flat).unwrap();
            for v in &mut symbols {
                *v += sigma * rng.next_gaussian();
            }
            let llr = Constellation::Bpsk
                .demap_llrs(&symbols, sigma * sigma)
                .unwrap();
            let llrs = TurboChannelLlrs::from_flat(&llr, 100, code.tail_steps()).unwrap();
            let dec = code.decode(&llrs).unwrap();
            bit_errors += dec.iter().zip(&msg).filter(|(a, b)| a != b).count();
            bits += 100;
        }
        // At 2 dB a rate-1/3 turbo code is essentially error-free.
        assert!(
            (bit_errors as f64) / (bits as f64) < 0.01,
            "{bit_errors}/{bits}"
        );
    }
}
