//! Monte-Carlo bit-error-rate estimation with an error-count stopping
//! rule and Wilson-interval confidence half-widths.

use serde::{Deserialize, Serialize};

use crate::channel::{derive_seed, transmit, ChannelParams, SeededRng};

use super::{EvalError, Scheme};

/// Simulate until both users have at least `min_errors` bit errors or
/// `max_blocks` blocks have run, whichever comes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingRule {
    pub min_errors: u64,
    pub max_blocks: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_blocks: 100_000,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.min_errors < 1 || self.max_blocks < 1 {
            return Err(EvalError::Config(
                "stopping rule needs min_errors >= 1 and max_blocks >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One measured operating point of a scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub scheme: String,
    pub variant: String,
    pub h: f64,
    pub snr_db: f64,
    pub k: usize,
    pub ber_user1: f64,
    pub ber_user2: f64,
    pub ber_avg: f64,
    /// Average of the two users' block error rates (a block counts as
    /// errored when at least one of its bits is wrong).
    pub bler: f64,
    pub blocks: u64,
    pub bit_errors_u1: u64,
    pub bit_errors_u2: u64,
    /// 95% Wilson half-width over the pooled per-bit errors of both users.
    /// Treats bits as independent, which understates the spread of block
    /// codes whose errors arrive in bursts; see the cluster fields for a
    /// dispersion estimate at block granularity.
    pub ci95: f64,
    pub seed: u64,
    /// Standard error of `ber_avg` estimated from the per-block error
    /// counts (robust to within-block correlation). Not part of the CSV
    /// schema; zero after parsing a table back in.
    #[serde(skip)]
    pub cluster_se_avg: f64,
    #[serde(skip)]
    pub cluster_se_u1: f64,
    #[serde(skip)]
    pub cluster_se_u2: f64,
}

impl BerPoint {
    /// 95% half-width from the block-level dispersion.
    pub fn cluster_ci95(&self) -> f64 {
        Z95 * self.cluster_se_avg
    }
}

const Z95: f64 = 1.959963984540054;

/// Wilson score half-width for `x` successes in `n` trials.
pub fn wilson_half_width(x: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let nf = n as f64;
    let p = x as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom
}

/// Whether two measured rates are statistically compatible: their 95%
/// block-level intervals overlap (falling back to the per-bit Wilson
/// width for points parsed from CSV, which carry no block dispersion).
pub fn ci_overlap(a: &BerPoint, b: &BerPoint) -> bool {
    let wa = if a.cluster_se_avg > 0.0 {
        a.cluster_ci95()
    } else {
        a.ci95
    };
    let wb = if b.cluster_se_avg > 0.0 {
        b.cluster_ci95()
    } else {
        b.ci95
    };
    (a.ber_avg - b.ber_avg).abs() <= wa + wb
}

/// Runs one scheme at one operating point until the stopping rule fires.
///
/// Deterministic given the seed: message bits, noise, and block order
/// all come from named streams derived from it.
pub fn estimate_ber(
    scheme: &dyn Scheme,
    h: f64,
    snr_db: f64,
    stop: &StoppingRule,
    seed: u64,
) -> Result<BerPoint, EvalError> {
    stop.validate()?;
    let params = ChannelParams::from_snr_db(h, snr_db)?;
    let k = scheme.message_len();
    let batch = scheme.batch_hint().max(1);
    let mut bits1 = SeededRng::new(seed, "bits/u1");
    let mut bits2 = SeededRng::new(seed, "bits/u2");
    let mut noise = SeededRng::new(seed, "noise");

    let mut blocks = 0u64;
    let mut e1 = 0u64;
    let mut e2 = 0u64;
    let mut blk1 = 0u64;
    let mut blk2 = 0u64;
    // Per-block second moments for the cluster standard errors.
    let mut sq1 = 0.0f64;
    let mut sq2 = 0.0f64;
    let mut sq_sum = 0.0f64;

    while blocks < stop.max_blocks && (e1 < stop.min_errors || e2 < stop.min_errors) {
        let j = batch.min((stop.max_blocks - blocks) as usize);
        let b1: Vec<Vec<u8>> = (0..j)
            .map(|_| {
                let mut b = vec![0u8; k];
                bits1.fill_bits(&mut b);
                b
            })
            .collect();
        let b2: Vec<Vec<u8>> = (0..j)
            .map(|_| {
                let mut b = vec![0u8; k];
                bits2.fill_bits(&mut b);
                b
            })
            .collect();
        let (c1, c2) = scheme.encode_pair(&b1, &b2)?;
        let mut y1 = Vec::with_capacity(j);
        let mut y2 = Vec::with_capacity(j);
        for row in 0..j {
            let (a, b) = transmit(&c1[row], &c2[row], &params, &mut noise)?;
            y1.push(a);
            y2.push(b);
        }
        let (d1, d2) = scheme.decode_pair(&y1, &y2, &params)?;
        for row in 0..j {
            let err1 = count_errors(&b1[row], &d1[row]);
            let err2 = count_errors(&b2[row], &d2[row]);
            e1 += err1;
            e2 += err2;
            blk1 += (err1 > 0) as u64;
            blk2 += (err2 > 0) as u64;
            sq1 += (err1 * err1) as f64;
            sq2 += (err2 * err2) as f64;
            let both = (err1 + err2) as f64;
            sq_sum += both * both;
        }
        blocks += j as u64;
    }

    let bits_per_user = blocks * k as u64;
    let ber1 = e1 as f64 / bits_per_user as f64;
    let ber2 = e2 as f64 / bits_per_user as f64;
    // Standard error of a mean of per-block counts, scaled to a rate.
    let cluster_se = |sum: f64, sumsq: f64, denom_bits: f64| -> f64 {
        let b = blocks as f64;
        if blocks < 2 {
            return 0.0;
        }
        let var = ((sumsq - sum * sum / b) / (b - 1.0)).max(0.0);
        (var * b).sqrt() / denom_bits
    };
    Ok(BerPoint {
        scheme: scheme.scheme_id(),
        variant: scheme.variant_id(),
        h,
        snr_db,
        k,
        ber_user1: ber1,
        ber_user2: ber2,
        ber_avg: 0.5 * (ber1 + ber2),
        bler: 0.5 * (blk1 + blk2) as f64 / blocks as f64,
        blocks,
        bit_errors_u1: e1,
        bit_errors_u2: e2,
        ci95: wilson_half_width(e1 + e2, 2 * bits_per_user),
        seed,
        cluster_se_avg: cluster_se(
            (e1 + e2) as f64,
            sq_sum,
            2.0 * bits_per_user as f64,
        ),
        cluster_se_u1: cluster_se(e1 as f64, sq1, bits_per_user as f64),
        cluster_se_u2: cluster_se(e2 as f64, sq2, bits_per_user as f64),
    })
}

fn count_errors(truth: &[u8], decided: &[u8]) -> u64 {
    truth
        .iter()
        .zip(decided)
        .filter(|(a, b)| a != b)
        .count() as u64
}

/// Seed for one grid point, decoupled from every other point.
pub fn point_seed(base: u64, scheme_id: &str, h: f64, snr_db: f64, k: usize) -> u64 {
    derive_seed(
        base,
        &[
            "point",
            scheme_id,
            &format!("h:{:016x}", h.to_bits()),
            &format!("snr:{:016x}", snr_db.to_bits()),
            &format!("k:{k}"),
        ],
    )
}
