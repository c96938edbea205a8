//! Maximum-likelihood sequence decoding over the code trellis.

#![allow(clippy::needless_range_loop)]

use super::convcode::ConvCode;
use super::ClassicError;

const INF: f64 = f64::INFINITY;

/// Decodes BPSK-modulated received symbols (bit 0 -> +1, bit 1 -> -1)
/// by minimum squared Euclidean distance, which is the ML decision on
/// an AWGN channel regardless of the noise variance.
///
/// Equal-metric candidates resolve to the lower-indexed predecessor
/// state, and equal end-state metrics to the lower-indexed state.
pub fn viterbi_decode(code: &ConvCode, received: &[f64]) -> Result<Vec<u8>, ClassicError> {
    let n = code.outputs_per_step();
    if !received.len().is_multiple_of(n) {
        return Err(ClassicError::BadLength {
            got: received.len(),
            per_step: n,
        });
    }
    let steps = received.len() / n;
    let tail = code.tail_steps();
    if steps < tail {
        return Err(ClassicError::BadLength {
            got: received.len(),
            per_step: n,
        });
    }
    let msg_len = steps - tail;
    let num_states = code.num_states();

    let mut metric = vec![INF; num_states];
    metric[0] = 0.0;
    // survivor[t][s] = (predecessor state, input bit)
    let mut survivor = vec![vec![(0usize, 0u8); num_states]; steps];

    for t in 0..steps {
        let r = &received[t * n..(t + 1) * n];
        let mut next = vec![INF; num_states];
        for s in 0..num_states {
            if metric[s] == INF {
                continue;
            }
            let inputs: &[u8] = if t >= msg_len {
                &[2] // tail marker; resolved below
            } else {
                &[0, 1]
            };
            for &u in inputs {
                let u = if u == 2 { code.tail_input(s) } else { u };
                let (out, ns) = code.step(s, u);
                let mut bm = 0.0;
                for (j, &rj) in r.iter().enumerate() {
                    let sym = 1.0 - 2.0 * ((out >> j) & 1) as f64;
                    let d = rj - sym;
                    bm += d * d;
                }
                let cand = metric[s] + bm;
                // Strict inequality keeps the lower-indexed predecessor on ties.
                if cand < next[ns] {
                    next[ns] = cand;
                    survivor[t][ns] = (s, u);
                }
            }
        }
        metric = next;
    }

    let mut state = if code.is_terminated() {
        0
    } else {
        let mut best = 0;
        for s in 1..num_states {
            if metric[s] < metric[best] {
                best = s;
            }
        }
        best
    };
    if metric[state] == INF {
        return Err(ClassicError::BadLength {
            got: received.len(),
            per_step: n,
        });
    }

    let mut decisions = vec![0u8; steps];
    for t in (0..steps).rev() {
        let (prev, bit) = survivor[t][state];
        decisions[t] = bit;
        state = prev;
    }
    decisions.truncate(msg_len);
    Ok(decisions)
}
