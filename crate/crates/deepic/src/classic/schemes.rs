//! Classic two-user schemes: treating interference as noise (TIN) and
//! time division (TD), both built on the rate-1/3 Turbo code, plus the
//! point-to-point reference pipelines.

use serde::{Deserialize, Serialize};

use crate::channel::{transmit, ChannelParams, SeededRng};

use super::modulation::Constellation;
use super::turbo::{TurboChannelLlrs, TurboCode};
use super::ClassicError;

/// Both users transmit Turbo-coded BPSK over every slot; each receiver
/// treats the other user's signal as Gaussian noise of variance `h^2`.
#[derive(Clone, Debug)]
pub struct TinScheme {
    pub code: TurboCode,
}

impl TinScheme {
    pub fn new(code: TurboCode) -> Self {
        Self { code }
    }

    pub fn frame_len(&self) -> usize {
        self.code.coded_len()
    }

    pub fn encode_block(&self, bits: &[u8]) -> Result<Vec<f64>, ClassicError> {
        let flat = self.code.encode(bits)?.to_bits();
        Constellation::Bpsk.modulate(&flat)
    }

    /// Decodes one received frame with the effective noise variance
    /// `sigma^2 + h^2` (unit-power BPSK interference treated as Gaussian).
    pub fn decode_block(&self, y: &[f64], params: &ChannelParams) -> Result<Vec<u8>, ClassicError> {
        let eff_var = params.sigma * params.sigma + params.h * params.h;
        let llr = Constellation::Bpsk.demap_llrs(y, eff_var)?;
        let llrs =
            TurboChannelLlrs::from_flat(&llr, self.code.message_len(), self.code.tail_steps())?;
        self.code.decode(&llrs)
    }

    /// One-shot simulation of a block pair over the channel.
    pub fn transmit_decode(
        &self,
        b1: &[u8],
        b2: &[u8],
        params: &ChannelParams,
        rng: &mut SeededRng,
    ) -> Result<(Vec<u8>, Vec<u8>), ClassicError> {
        let s1 = self.encode_block(b1)?;
        let s2 = self.encode_block(b2)?;
        let (y1, y2) = transmit(&s1, &s2, params, rng)?;
        Ok((self.decode_block(&y1, params)?, self.decode_block(&y2, params)?))
    }
}

/// Power policy for the time-division scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TdPowerPolicy {
    /// Boost the active half by `sqrt(2)` so per-block average power is 1,
    /// matching the per-block normalization of the learned code.
    #[default]
    EqualBlockEnergy,
    /// Transmit unit-power symbols in the active half only.
    EqualSymbolPower,
}

/// Users occupy disjoint halves of the frame with Gray 4-PAM carrying
/// two coded bits per symbol, so interference never overlaps.
#[derive(Clone, Debug)]
pub struct TdScheme {
    pub code: TurboCode,
    pub policy: TdPowerPolicy,
}

impl TdScheme {
    pub fn new(code: TurboCode, policy: TdPowerPolicy) -> Result<Self, ClassicError> {
        if !code.coded_len().is_multiple_of(2) {
            return Err(ClassicError::InvalidCode(format!(
                "time division needs an even coded length, got {} (3K odd)",
                code.coded_len()
            )));
        }
        Ok(Self { code, policy })
    }

    fn constellation(&self) -> Constellation {
        Constellation::Pam4 {
            amplitude_scale: match self.policy {
                TdPowerPolicy::EqualBlockEnergy => std::f64::consts::SQRT_2,
                TdPowerPolicy::EqualSymbolPower => 1.0,
            },
        }
    }

    /// Symbols each user occupies (half the frame).
    pub fn half_len(&self) -> usize {
        self.code.coded_len() / 2
    }

    pub fn frame_len(&self) -> usize {
        self.code.coded_len()
    }

    /// Places the user's 4-PAM symbols in its half of the frame,
    /// zeros elsewhere.
    pub fn encode_block(&self, bits: &[u8], user: usize) -> Result<Vec<f64>, ClassicError> {
        let flat = self.code.encode(bits)?.to_bits();
        let symbols = self.constellation().modulate(&flat)?;
        debug_assert_eq!(symbols.len(), self.half_len());
        let mut frame = vec![0.0; self.frame_len()];
        let start = if user == 0 { 0 } else { self.half_len() };
        frame[start..start + symbols.len()].copy_from_slice(&symbols);
        Ok(frame)
    }

    pub fn decode_block(
        &self,
        y: &[f64],
        user: usize,
        params: &ChannelParams,
    ) -> Result<Vec<u8>, ClassicError> {
        let start = if user == 0 { 0 } else { self.half_len() };
        let own = &y[start..start + self.half_len()];
        let llr = self
            .constellation()
            .demap_llrs(own, params.sigma * params.sigma)?;
        let llrs =
            TurboChannelLlrs::from_flat(&llr, self.code.message_len(), self.code.tail_steps())?;
        self.code.decode(&llrs)
    }

    pub fn transmit_decode(
        &self,
        b1: &[u8],
        b2: &[u8],
        params: &ChannelParams,
        rng: &mut SeededRng,
    ) -> Result<(Vec<u8>, Vec<u8>), ClassicError> {
        let s1 = self.encode_block(b1, 0)?;
        let s2 = self.encode_block(b2, 1)?;
        let (y1, y2) = transmit(&s1, &s2, params, rng)?;
        Ok((
            self.decode_block(&y1, 0, params)?,
            self.decode_block(&y2, 1, params)?,
        ))
    }
}

/// Point-to-point Turbo pipeline (BPSK, true-noise LLRs).
#[derive(Clone, Debug)]
pub struct TurboP2p {
    pub code: TurboCode,
}

impl TurboP2p {
    pub fn encode_block(&self, bits: &[u8]) -> Result<Vec<f64>, ClassicError> {
        let flat = self.code.encode(bits)?.to_bits();
        Constellation::Bpsk.modulate(&flat)
    }

    pub fn decode_block(&self, y: &[f64], noise_var: f64) -> Result<Vec<u8>, ClassicError> {
        let llr = Constellation::Bpsk.demap_llrs(y, noise_var)?;
        let llrs =
            TurboChannelLlrs::from_flat(&llr, self.code.message_len(), self.code.tail_steps())?;
        self.code.decode(&llrs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tin_zero_noise_no_interference_is_exact() {
        let code = TurboCode::new(36, 3).unwrap();
        let scheme = TinScheme::new(code);
        let params = ChannelParams::new(0.0, 0.0).unwrap();
        let mut rng = SeededRng::new(60, "tin");
        let b1: Vec<u8> = (0..36).map(|_| rng.next_bit()).collect();
        let b2: Vec<u8> = (0..36).map(|_| rng.next_bit()).collect();
        let (d1, d2) = scheme
            .transmit_decode(&b1, &b2, &params, &mut rng)
            .unwrap();
        assert_eq!(d1, b1);
        assert_eq!(d2, b2);
    }

    #[test]
    fn td_zero_noise_is_exact_at_any_interference() {
        let code = TurboCode::new(30, 5).unwrap();
        let scheme = TdScheme::new(code, TdPowerPolicy::EqualBlockEnergy).unwrap();
        let mut rng = SeededRng::new(61, "td");
        for h in [0.0, 0.3, 0.8, 1.5] {
            let params = ChannelParams::new(h, 0.0).unwrap();
            let b1: Vec<u8> = (0..30).map(|_| rng.next_bit()).collect();
            let b2: Vec<u8> = (0..30).map(|_| rng.next_bit()).collect();
            let (d1, d2) = scheme
                .transmit_decode(&b1, &b2, &params, &mut rng)
                .unwrap();
            assert_eq!(d1, b1, "h = {h}");
            assert_eq!(d2, b2, "h = {h}");
        }
    }

    #[test]
    fn td_power_accounting() {
        // Constellation algebra over equiprobable labels: one symbol per
        // level makes the averages exact.
        let all_labels = [0u8, 0, 0, 1, 1, 0, 1, 1];
        let unscaled = Constellation::pam4().modulate(&all_labels).unwrap();
        let p0: f64 = unscaled.iter().map(|s| s * s).sum::<f64>() / 4.0;
        assert!((p0 - 1.0).abs() < 1e-12, "unscaled mean power {p0}");

        let boosted = Constellation::Pam4 {
            amplitude_scale: std::f64::consts::SQRT_2,
        };
        let scaled = boosted.modulate(&all_labels).unwrap();
        let p2: f64 = scaled.iter().map(|s| s * s).sum::<f64>() / 4.0;
        assert!((p2 - 2.0).abs() < 1e-12, "TD active-half power {p2}");

        // Active half at power 2, silent half at 0: block average 1.
        let block = (p2 * 4.0 + 0.0) / 8.0;
        assert!((block - 1.0).abs() < 1e-12);

        // The silent half of an encoded frame really is silent.
        let code = TurboCode::new(30, 5).unwrap();
        let scheme = TdScheme::new(code, TdPowerPolicy::EqualBlockEnergy).unwrap();
        let mut rng = SeededRng::new(62, "td-power");
        let bits: Vec<u8> = (0..30).map(|_| rng.next_bit()).collect();
        let frame = scheme.encode_block(&bits, 0).unwrap();
        assert!(frame[scheme.half_len()..].iter().all(|&s| s == 0.0));
        let frame2 = scheme.encode_block(&bits, 1).unwrap();
        assert!(frame2[..scheme.half_len()].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn td_rejects_odd_coded_length() {
        // K odd makes 3K odd and the 4-PAM packing impossible.
        let code = TurboCode::new(31, 5).unwrap();
        assert!(TdScheme::new(code, TdPowerPolicy::default()).is_err());
    }
}
