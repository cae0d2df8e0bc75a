use super::Candidate;
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("evaluation budget exhausted: {used} used of {cap}, {requested} more requested")]
pub struct BudgetExhausted {
    pub used: u64,
    pub cap: u64,
    pub requested: u64,
}

/// Counts empirical evaluations against a hard cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalLedger {
    used: u64,
    cap: u64,
    per_task: BTreeMap<String, u64>,
}

impl EvalLedger {
    pub fn new(cap: u64) -> Self {
        EvalLedger { used: 0, cap, per_task: BTreeMap::new() }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn remaining(&self) -> u64 {
        self.cap - self.used
    }

    pub fn per_task(&self) -> &BTreeMap<String, u64> {
        &self.per_task
    }

    /// Reserve `count` evaluations for `task`, all or nothing.
    pub fn charge(&mut self, task: &str, count: u64) -> Result<(), BudgetExhausted> {
        if count > self.remaining() {
            return Err(BudgetExhausted { used: self.used, cap: self.cap, requested: count });
        }
        self.used += count;
        *self.per_task.entry(task.to_owned()).or_default() += count;
        Ok(())
    }
}

/// Number of candidates evaluated out of a batch of `n` at ratio `eta`:
/// zero when `eta` is zero, otherwise `round(eta·n)` (halves round up)
/// clamped to `[1, n]`.
pub fn sparse_count(eta: f64, n: usize) -> usize {
    if eta <= 0.0 || n == 0 {
        return 0;
    }
    let rounded = (eta * n as f64 + 0.5).floor() as usize;
    rounded.clamp(1, n)
}

/// Pick `sparse_count(eta, batch.len())` members uniformly at random to be
/// evaluated; every other member is reset to the unevaluated placeholder.
/// Returns the chosen indices in ascending order.
pub fn sparse_mark(batch: &mut [Candidate], eta: f64, rng: &mut Rng) -> Vec<usize> {
    let k = sparse_count(eta, batch.len());
    let mut chosen = rand::seq::index::sample(rng, batch.len(), k).into_vec();
    chosen.sort_unstable();
    let mut keep = vec![false; batch.len()];
    for &i in &chosen {
        keep[i] = true;
    }
    for (c, keep) in batch.iter_mut().zip(keep) {
        if !keep {
            c.status = super::Status::Unevaluated;
            c.score = f64::INFINITY;
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{Origin, Status};
    use crate::rng::rng_from_seed;

    #[test]
    fn sparse_count_examples() {
        assert_eq!(sparse_count(0.5, 10), 5);
        assert_eq!(sparse_count(0.1, 3), 1);
        assert_eq!(sparse_count(0.0, 7), 0);
        assert_eq!(sparse_count(0.5, 5), 3);
        assert_eq!(sparse_count(0.5, 1), 1);
        assert_eq!(sparse_count(1.0, 4), 4);
    }

    #[test]
    fn sparse_mark_selects_exactly_the_count() {
        let mut rng = rng_from_seed(9);
        let mut batch: Vec<Candidate> = (0..10).map(|i| Candidate::new(i, Origin::Init, None, None, vec![])).collect();
        let chosen = sparse_mark(&mut batch, 0.3, &mut rng);
        assert_eq!(chosen.len(), 3);
        assert!(chosen.windows(2).all(|w| w[0] < w[1]));
        assert!(batch.iter().all(|c| c.status == Status::Unevaluated));
    }

    #[test]
    fn ledger_never_exceeds_cap() {
        let mut l = EvalLedger::new(5);
        l.charge("a", 3).unwrap();
        assert!(l.charge("b", 3).is_err());
        l.charge("b", 2).unwrap();
        assert_eq!((l.used(), l.remaining()), (5, 0));
        assert_eq!(l.per_task().get("a"), Some(&3));
    }
}
