//! Symbol-MAP decoding of a convolutional code by the log-domain
//! forward-backward recursion with exact log-sum-exp combining.
//!
//! All LLRs follow the convention `L = ln(P(bit = 0) / P(bit = 1))`, so
//! a positive value favors bit 0 and decisions are `bit = (L < 0)`.

#![allow(clippy::needless_range_loop)]

use super::convcode::ConvCode;
use super::ClassicError;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// `ln(e^a + e^b)` with infinities handled exactly.
pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == NEG_INF {
        return b;
    }
    if b == NEG_INF {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Posterior and extrinsic information LLRs for each message bit.
#[derive(Clone, Debug)]
pub struct BcjrOutput {
    pub posterior: Vec<f64>,
    pub extrinsic: Vec<f64>,
}

/// Half-LLR metric contribution of observing `bit` under LLR `llr`.
fn bit_metric(bit: u8, llr: f64) -> f64 {
    if bit == 0 {
        0.5 * llr
    } else {
        -0.5 * llr
    }
}

/// Exact symbol-MAP posteriors for the constituent code.
///
/// `channel_llr` holds one LLR per coded bit in encoder emission order,
/// covering the tail steps when the code is terminated; `prior_llr`
/// holds one a-priori LLR per message bit. The extrinsic output removes
/// both the prior and the systematic channel contribution.
pub fn bcjr_decode(
    code: &ConvCode,
    channel_llr: &[f64],
    prior_llr: &[f64],
) -> Result<BcjrOutput, ClassicError> {
    let n = code.outputs_per_step();
    let k = prior_llr.len();
    let tail = code.tail_steps();
    let steps = k + tail;
    if channel_llr.len() != steps * n {
        return Err(ClassicError::BadLength {
            got: channel_llr.len(),
            per_step: n,
        });
    }
    if let Some(i) = channel_llr
        .iter()
        .chain(prior_llr.iter())
        .position(|v| !v.is_finite())
    {
        return Err(ClassicError::NonFiniteLlr(i));
    }
    let num_states = code.num_states();

    // Branch metric of the transition (s, u) at step t.
    let gamma = |t: usize, s: usize, u: u8| -> f64 {
        let (out, _) = code.step(s, u);
        let mut g = if t < k {
            bit_metric(u, prior_llr[t])
        } else {
            0.0
        };
        for j in 0..n {
            g += bit_metric(((out >> j) & 1) as u8, channel_llr[t * n + j]);
        }
        g
    };
    let inputs_at = |t: usize, s: usize| -> Vec<u8> {
        if t >= k {
            vec![code.tail_input(s)]
        } else {
            vec![0, 1]
        }
    };

    // Forward pass from the zero state.
    let mut alpha = vec![vec![NEG_INF; num_states]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        for s in 0..num_states {
            if alpha[t][s] == NEG_INF {
                continue;
            }
            for u in inputs_at(t, s) {
                let (_, ns) = code.step(s, u);
                let cand = alpha[t][s] + gamma(t, s, u);
                alpha[t + 1][ns] = log_sum_exp(alpha[t + 1][ns], cand);
            }
        }
    }

    // Backward pass; terminated codes end in state zero, open codes
    // weight all end states uniformly.
    let mut beta = vec![vec![NEG_INF; num_states]; steps + 1];
    if code.is_terminated() {
        beta[steps][0] = 0.0;
    } else {
        beta[steps] = vec![0.0; num_states];
    }
    for t in (0..steps).rev() {
        for s in 0..num_states {
            for u in inputs_at(t, s) {
                let (_, ns) = code.step(s, u);
                if beta[t + 1][ns] == NEG_INF {
                    continue;
                }
                let cand = gamma(t, s, u) + beta[t + 1][ns];
                beta[t][s] = log_sum_exp(beta[t][s], cand);
            }
        }
    }

    let mut posterior = Vec::with_capacity(k);
    let mut extrinsic = Vec::with_capacity(k);
    for t in 0..k {
        let mut num = NEG_INF; // bit 0
        let mut den = NEG_INF; // bit 1
        for s in 0..num_states {
            if alpha[t][s] == NEG_INF {
                continue;
            }
            for u in [0u8, 1] {
                let (_, ns) = code.step(s, u);
                if beta[t + 1][ns] == NEG_INF {
                    continue;
                }
                let metric = alpha[t][s] + gamma(t, s, u) + beta[t + 1][ns];
                if u == 0 {
                    num = log_sum_exp(num, metric);
                } else {
                    den = log_sum_exp(den, metric);
                }
            }
        }
        let post = num - den;
        let sys = if code.is_recursive() {
            channel_llr[t * n]
        } else {
            0.0
        };
        posterior.push(post);
        extrinsic.push(post - prior_llr[t] - sys);
    }
    Ok(BcjrOutput {
        posterior,
        extrinsic,
    })
}
