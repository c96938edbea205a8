//! Exponential moving average of the batch normalization statistics,
//! accumulated during training and snapshotted into frozen form for
//! batch-size-independent evaluation.

use super::layers::BranchStat;
use super::model::{FrozenStats, User};

/// EMA tracker over both users' per-branch statistics.
#[derive(Clone, Debug)]
pub struct StatsEma {
    decay: f64,
    users: [Option<Vec<BranchStat>>; 2],
}

impl StatsEma {
    pub fn new(decay: f64) -> Self {
        Self {
            decay,
            users: [None, None],
        }
    }

    /// Restarts accumulation (used at the head of the final epoch so the
    /// frozen statistics reflect only converged parameters).
    pub fn reset(&mut self) {
        self.users = [None, None];
    }

    pub fn update(&mut self, user: User, batch: &[BranchStat]) {
        let slot = &mut self.users[user.index()];
        match slot {
            None => *slot = Some(batch.to_vec()),
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(batch) {
                    blend(&mut a.mean, &b.mean, self.decay);
                    blend(&mut a.std, &b.std, self.decay);
                }
            }
        }
    }

    pub fn snapshot(&self) -> Option<FrozenStats> {
        match (&self.users[0], &self.users[1]) {
            (Some(u1), Some(u2)) => Some(FrozenStats {
                user1: u1.clone(),
                user2: u2.clone(),
            }),
            _ => None,
        }
    }
}

fn blend(acc: &mut [f64], new: &[f64], decay: f64) {
    for (a, &n) in acc.iter_mut().zip(new) {
        *a = decay * *a + (1.0 - decay) * n;
    }
}
