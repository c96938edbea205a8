//! Seeded bit permutations shared by the Turbo code and the interleaved
//! neural variant.

use serde::{Deserialize, Serialize};

use crate::channel::SeededRng;

/// A permutation of `{0..k-1}` together with its inverse.
///
/// `interleave` gathers: `out[i] = v[perm[i]]`; `deinterleave` applies
/// the inverse so the two compose to the identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interleaver {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Interleaver {
    /// Identity permutation of length `k`.
    pub fn identity(k: usize) -> Self {
        let perm: Vec<usize> = (0..k).collect();
        Self {
            inverse: perm.clone(),
            perm,
        }
    }

    /// Uniform random permutation of length `k` via Fisher-Yates over a
    /// seeded stream.
    pub fn random(k: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed, "interleaver");
        let mut perm: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            let j = rng.below(i + 1);
            perm.swap(i, j);
        }
        Self::from_perm(perm).expect("generated permutation is valid")
    }

    /// Builds from an explicit permutation, validating bijectivity.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self, String> {
        let k = perm.len();
        let mut inverse = vec![usize::MAX; k];
        for (i, &p) in perm.iter().enumerate() {
            if p >= k || inverse[p] != usize::MAX {
                return Err(format!("not a permutation of 0..{k}: entry {p} at {i}"));
            }
            inverse[p] = i;
        }
        Ok(Self { perm, inverse })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn interleave<T: Copy>(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.perm.len());
        self.perm.iter().map(|&p| v[p]).collect()
    }

    pub fn deinterleave<T: Copy>(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.inverse.len());
        self.inverse.iter().map(|&p| v[p]).collect()
    }
}
