//! Simulated proof-of-work ledger: transaction pool, block assembly under
//! size and interval constraints, Merkle commitments, compact membership
//! proofs, and block integrity validation.

pub mod block;
pub mod chain;
pub mod mempool;
pub mod merkle;
pub mod params;
pub mod tx;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::contracts::state::{ContractError, ContractState};
use crate::digest::Digest;
use crate::time::SimTime;

pub use block::{Block, BlockCodecError, BlockHeader};
pub use chain::{Chain, ChainError};
pub use mempool::Mempool;
pub use merkle::{build_proof, merkle_root, verify_proof, MerkleError, MerkleProof};
pub use params::{enrolment_upper_bound, LedgerParams, ParamsError};
pub use tx::{Transaction, TxCodecError, TX_SIZE_BYTES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubmitError {
    /// Signature or governance failure; the transaction is dropped.
    #[error("rejected: {0}")]
    Rejected(#[from] ContractError),
    /// Same digest already pending or mined. Non-fatal: the original
    /// submission stands.
    #[error("duplicate transaction")]
    Duplicate,
}

/// Acknowledgement returned for an accepted submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxAck {
    pub digest: Digest,
    pub queue_len: usize,
}

/// A full ledger node: chain, FIFO mempool, and the replayed contract state
/// used for admission. All mutation happens on the simulation event loop;
/// blocks are immutable once appended.
#[derive(Debug, Clone)]
pub struct Ledger {
    chain: Chain,
    pool: Mempool,
    state: ContractState,
    mined: BTreeSet<Digest>,
}

impl Ledger {
    pub fn new(params: LedgerParams) -> Ledger {
        Ledger {
            chain: Chain::new(params),
            pool: Mempool::new(),
            state: ContractState::new(),
            mined: BTreeSet::new(),
        }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn pool(&self) -> &Mempool {
        &self.pool
    }

    pub fn params(&self) -> &LedgerParams {
        self.chain.params()
    }

    /// Validates and queues a transaction.
    ///
    /// The admission rule requires a verifying signature and the governance
    /// authority the payload claims, resolved against the current chain
    /// state; duplicates of pending or mined digests are rejected
    /// idempotently.
    pub fn submit_tx(&mut self, tx: Transaction) -> Result<TxAck, SubmitError> {
        let digest = tx.digest();
        if self.mined.contains(&digest) || self.pool.contains(&digest) {
            return Err(SubmitError::Duplicate);
        }
        self.state.admit(&tx, self.chain.height())?;
        // Same-device imprints racing in the pool: first in FIFO wins.
        if let crate::contracts::payload::Payload::Imprint(ic) = tx.payload() {
            let pending_conflict = self.pool.peek().any(|pending| {
                matches!(pending.payload(),
                    crate::contracts::payload::Payload::Imprint(other) if other.device_id == ic.device_id)
            });
            if pending_conflict {
                return Err(SubmitError::Rejected(ContractError::AlreadyImprinted(
                    ic.device_id,
                )));
            }
        }
        self.pool.push(tx);
        Ok(TxAck {
            digest,
            queue_len: self.pool.len(),
        })
    }

    /// Mines the next block at simulated time `now`: drains up to
    /// `block_size_bytes / tx_size_bytes` pooled transactions in FIFO order,
    /// seals them under the Merkle root, and appends after validation. An
    /// empty pool yields an empty block.
    pub fn mine_block(&mut self, now: SimTime) -> &Block {
        let capacity = self.params().block_capacity();
        let txs = self.pool.drain(capacity);
        let block = Block::mine(
            self.chain.height() + 1,
            self.chain.tip().digest,
            txs,
            now,
            self.params().difficulty_bits,
        );
        let height = block.header.height;
        for (index, tx) in block.txs.iter().enumerate() {
            self.mined.insert(tx.digest());
            self.state.apply_tx(height, index as u32, tx);
        }
        self.chain
            .try_append(block)
            .expect("locally mined block validates");
        self.chain.blocks().last().expect("just appended")
    }

    /// Digests of every mined transaction, for conservation checks.
    pub fn mined_digests(&self) -> &BTreeSet<Digest> {
        &self.mined
    }

    /// Membership proof for transaction `index` of the block at `height`.
    pub fn proof_for(&self, height: u64, index: usize) -> Option<MerkleProof> {
        let block = self.chain.block_at(height)?;
        let leaves: Vec<[u8; TX_SIZE_BYTES]> = block.txs.iter().map(|tx| tx.encode()).collect();
        build_proof(&leaves, index).ok()
    }
}
