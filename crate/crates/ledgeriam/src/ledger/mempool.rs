//! FIFO transaction pool with digest deduplication.

use std::collections::{BTreeSet, VecDeque};

use crate::digest::Digest;
use crate::ledger::tx::Transaction;

/// Pending transactions in arrival order. Duplicate digests are rejected
/// idempotently so retried submissions cannot double-mine.
#[derive(Debug, Clone, Default)]
pub struct Mempool {
    queue: VecDeque<Transaction>,
    pending: BTreeSet<Digest>,
}

impl Mempool {
    pub fn new() -> Mempool {
        Mempool::default()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn contains(&self, digest: &Digest) -> bool {
        self.pending.contains(digest)
    }

    /// Queues a transaction; returns false when its digest is already
    /// pending.
    pub fn push(&mut self, tx: Transaction) -> bool {
        let digest = tx.digest();
        if !self.pending.insert(digest) {
            return false;
        }
        self.queue.push_back(tx);
        true
    }

    /// Removes and returns up to `max` transactions in FIFO order.
    pub fn drain(&mut self, max: usize) -> Vec<Transaction> {
        let take = max.min(self.queue.len());
        let mut out = Vec::with_capacity(take);
        for _ in 0..take {
            let tx = self.queue.pop_front().expect("len checked");
            self.pending.remove(&tx.digest());
            out.push(tx);
        }
        out
    }

    /// Pending transactions that would go into the next block, without
    /// removing them.
    pub fn peek(&self) -> impl Iterator<Item = &Transaction> {
        self.queue.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::identity::Identity;
    use crate::contracts::ops::imprint_unchecked;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tx(seed: u64) -> Transaction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let admin = Identity::generate(&mut rng);
        let device = Identity::generate(&mut rng);
        imprint_unchecked(device.public_key(), admin.public_key(), &admin)
    }

    #[test]
    fn fifo_order_and_dedup() {
        let mut pool = Mempool::new();
        let a = tx(1);
        let b = tx(2);
        assert!(pool.push(a.clone()));
        assert!(pool.push(b.clone()));
        assert!(!pool.push(a.clone()), "duplicate digest rejected");
        assert_eq!(pool.len(), 2);
        let drained = pool.drain(10);
        assert_eq!(drained, vec![a, b]);
        assert!(pool.is_empty());
    }

    #[test]
    fn drain_respects_capacity() {
        let mut pool = Mempool::new();
        for seed in 0..5 {
            pool.push(tx(seed));
        }
        let first = pool.drain(3);
        assert_eq!(first.len(), 3);
        assert_eq!(pool.len(), 2);
        // Drained digests may be resubmitted (chain-level dedup is the
        // ledger's job).
        assert!(pool.push(first[0].clone()));
    }
}
