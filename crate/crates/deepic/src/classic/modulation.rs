//! Real-valued constellations with exact per-bit LLR demapping.
//!
//! BPSK maps bit 0 to `+1` and bit 1 to `-1`. 4-PAM uses the Gray-labeled
//! levels `{-3, -1, +1, +3}/sqrt(5)`, unit average power before any
//! scaling, consuming two bits per symbol with the first bit most
//! significant: `00 -> -3A`, `01 -> -A`, `11 -> +A`, `10 -> +3A`.

use super::bcjr::log_sum_exp;
use super::ClassicError;

/// LLR magnitudes are saturated here so zero-noise demapping stays finite.
pub const LLR_CLAMP: f64 = 300.0;

/// Noise variance floor applied before demapping.
const VAR_FLOOR: f64 = 1e-12;

const PAM4_BASE: f64 = 0.4472135954999579; // 1/sqrt(5)

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constellation {
    Bpsk,
    /// Gray-labeled 4-PAM with an amplitude scale applied to every level.
    Pam4 { amplitude_scale: f64 },
}

impl Constellation {
    pub fn pam4() -> Self {
        Constellation::Pam4 {
            amplitude_scale: 1.0,
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Pam4 { .. } => 2,
        }
    }

    /// Average symbol power under equiprobable bits.
    pub fn average_power(&self) -> f64 {
        match self {
            Constellation::Bpsk => 1.0,
            Constellation::Pam4 { amplitude_scale } => amplitude_scale * amplitude_scale,
        }
    }

    fn pam4_levels(scale: f64) -> [f64; 4] {
        // Indexed by the 2-bit label (first bit << 1 | second bit).
        [
            -3.0 * PAM4_BASE * scale, // 00
            -PAM4_BASE * scale,       // 01
            3.0 * PAM4_BASE * scale,  // 10
            PAM4_BASE * scale,        // 11
        ]
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<f64>, ClassicError> {
        match self {
            Constellation::Bpsk => Ok(bits.iter().map(|&b| 1.0 - 2.0 * (b & 1) as f64).collect()),
            Constellation::Pam4 { amplitude_scale } => {
                if !bits.len().is_multiple_of(2) {
                    return Err(ClassicError::BadLength {
                        got: bits.len(),
                        per_step: 2,
                    });
                }
                let levels = Self::pam4_levels(*amplitude_scale);
                Ok(bits
                    .chunks_exact(2)
                    .map(|p| levels[((p[0] << 1) | p[1]) as usize])
                    .collect())
            }
        }
    }

    /// Exact per-bit LLRs `ln(P(bit=0|y)/P(bit=1|y))` under Gaussian
    /// noise of the given variance, clamped to `±LLR_CLAMP`.
    pub fn demap_llrs(&self, symbols: &[f64], noise_var: f64) -> Result<Vec<f64>, ClassicError> {
        let var = noise_var.max(VAR_FLOOR);
        match self {
            Constellation::Bpsk => Ok(symbols
                .iter()
                .map(|&y| (2.0 * y / var).clamp(-LLR_CLAMP, LLR_CLAMP))
                .collect()),
            Constellation::Pam4 { amplitude_scale } => {
                let levels = Self::pam4_levels(*amplitude_scale);
                let mut out = Vec::with_capacity(symbols.len() * 2);
                for &y in symbols {
                    let mut ll = [0.0f64; 4];
                    for (label, &s) in levels.iter().enumerate() {
                        ll[label] = -(y - s) * (y - s) / (2.0 * var);
                    }
                    // First bit: 0 -> labels {00, 01}; 1 -> {10, 11}.
                    let first = log_sum_exp(ll[0], ll[1]) - log_sum_exp(ll[2], ll[3]);
                    // Second bit: 0 -> labels {00, 10}; 1 -> {01, 11}.
                    let second = log_sum_exp(ll[0], ll[2]) - log_sum_exp(ll[1], ll[3]);
                    out.push(first.clamp(-LLR_CLAMP, LLR_CLAMP));
                    out.push(second.clamp(-LLR_CLAMP, LLR_CLAMP));
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SeededRng;
    use crate::classic::turbo::hard_decisions;

    #[test]
    fn pam4_unit_average_power() {
        let levels = Constellation::pam4_levels(1.0);
        let p: f64 = levels.iter().map(|s| s * s).sum::<f64>() / 4.0;
        assert!((p - 1.0).abs() < 1e-12);
        let boosted = Constellation::Pam4 {
            amplitude_scale: std::f64::consts::SQRT_2,
        };
        assert!((boosted.average_power() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gray_labels_differ_by_one_bit_between_neighbors() {
        let levels = Constellation::pam4_levels(1.0);
        let mut ordered: Vec<(usize, f64)> = levels.iter().copied().enumerate().collect();
        ordered.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        for w in ordered.windows(2) {
            let diff = (w[0].0 ^ w[1].0).count_ones();
            assert_eq!(diff, 1, "labels {:02b} vs {:02b}", w[0].0, w[1].0);
        }
    }

    #[test]
    fn zero_noise_llr_signs_reproduce_bits() {
        let mut rng = SeededRng::new(50, "demap");
        for scale in [1.0, std::f64::consts::SQRT_2] {
            let c = Constellation::Pam4 {
                amplitude_scale: scale,
            };
            let bits: Vec<u8> = (0..400).map(|_| rng.next_bit()).collect();
            let symbols = c.modulate(&bits).unwrap();
            let llrs = c.demap_llrs(&symbols, 0.0).unwrap();
            assert_eq!(hard_decisions(&llrs), bits);
        }
        let bits: Vec<u8> = (0..100).map(|_| rng.next_bit()).collect();
        let symbols = Constellation::Bpsk.modulate(&bits).unwrap();
        let llrs = Constellation::Bpsk.demap_llrs(&symbols, 0.0).unwrap();
        assert_eq!(hard_decisions(&llrs), bits);
    }

    #[test]
    fn llrs_stay_clamped_and_finite() {
        let c = Constellation::pam4();
        let llrs = c.demap_llrs(&[1e6, -1e6], 1e-9).unwrap();
        for l in llrs {
            assert!(l.is_finite() && l.abs() <= LLR_CLAMP);
        }
    }

    #[test]
    fn pam4_rejects_odd_bit_count() {
        assert!(Constellation::pam4().modulate(&[1, 0, 1]).is_err());
    }
}
