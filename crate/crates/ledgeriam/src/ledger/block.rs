//! Blocks: mined batches of transactions committed under a Merkle root with a
//! hashcash-style integrity stamp.
//!
//! The proof-of-work here is an integrity and anti-forgery primitive, not a
//! consensus race: difficulty defaults to a few leading zero bits so mining
//! cost is negligible and block timing is driven entirely by the simulated
//! clock. Any receiver can cheaply verify that a block was not trivially
//! forged by recomputing the header digest and the Merkle commitment.

use thiserror::Error;

use crate::digest::{hash_bytes, Digest, DIGEST_LEN};
use crate::ledger::merkle::merkle_root;
use crate::ledger::params::LedgerParams;
use crate::ledger::tx::{Transaction, TxCodecError, TX_SIZE_BYTES};
use crate::time::SimTime;

/// Serialized header preimage: height, prev_hash, merkle_root, timestamp,
/// nonce.
const HEADER_PREIMAGE_LEN: usize = 8 + DIGEST_LEN + DIGEST_LEN + 8 + 8;

/// Header plus its digest, as serialized.
pub const HEADER_LEN: usize = HEADER_PREIMAGE_LEN + DIGEST_LEN;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlockCodecError {
    #[error("block record too short ({0} bytes)")]
    Truncated(usize),
    #[error("block record has {extra} trailing bytes")]
    TrailingBytes { extra: usize },
    #[error("transaction {index}: {source}")]
    Tx {
        index: usize,
        #[source]
        source: TxCodecError,
    },
}

/// An SPV-storable block header carrying its own digest.
///
/// The digest is the proof-of-work subject; it is serialized alongside the
/// preimage fields so that any single-byte tamper of an exported block is
/// detectable by recomputation, independent of the difficulty setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub prev_hash: Digest,
    pub merkle_root: Digest,
    pub timestamp: SimTime,
    pub nonce: u64,
    pub digest: Digest,
}

impl BlockHeader {
    fn preimage(height: u64, prev_hash: &Digest, merkle_root: &Digest, timestamp: SimTime, nonce: u64) -> [u8; HEADER_PREIMAGE_LEN] {
        let mut buf = [0u8; HEADER_PREIMAGE_LEN];
        buf[0..8].copy_from_slice(&height.to_le_bytes());
        buf[8..40].copy_from_slice(prev_hash.as_bytes());
        buf[40..72].copy_from_slice(merkle_root.as_bytes());
        buf[72..80].copy_from_slice(&timestamp.millis().to_le_bytes());
        buf[80..88].copy_from_slice(&nonce.to_le_bytes());
        buf
    }

    fn compute_digest(&self) -> Digest {
        hash_bytes(&Self::preimage(
            self.height,
            &self.prev_hash,
            &self.merkle_root,
            self.timestamp,
            self.nonce,
        ))
    }

    /// True iff the carried digest recomputes from the header fields and
    /// satisfies the leading-zero-bits difficulty predicate.
    pub fn verify_pow(&self, difficulty_bits: u32) -> bool {
        let recomputed = self.compute_digest();
        recomputed == self.digest && recomputed.leading_zero_bits() >= difficulty_bits
    }

    /// True iff `next` extends this header: sequential height, linked
    /// prev_hash, and valid proof-of-work.
    pub fn accepts_child(&self, next: &BlockHeader, difficulty_bits: u32) -> bool {
        next.height == self.height + 1
            && next.prev_hash == self.digest
            && next.verify_pow(difficulty_bits)
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&Self::preimage(
            self.height,
            &self.prev_hash,
            &self.merkle_root,
            self.timestamp,
            self.nonce,
        ));
        out.extend_from_slice(self.digest.as_bytes());
    }

    fn decode(bytes: &[u8]) -> BlockHeader {
        let read_digest = |range: std::ops::Range<usize>| {
            let mut d = [0u8; DIGEST_LEN];
            d.copy_from_slice(&bytes[range]);
            Digest(d)
        };
        BlockHeader {
            height: u64::from_le_bytes(bytes[0..8].try_into().unwrap()),
            prev_hash: read_digest(8..40),
            merkle_root: read_digest(40..72),
            timestamp: SimTime::from_millis(u64::from_le_bytes(bytes[72..80].try_into().unwrap())),
            nonce: u64::from_le_bytes(bytes[80..88].try_into().unwrap()),
            digest: read_digest(88..120),
        }
    }
}

/// A mined block: header plus the ordered transaction batch it commits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub txs: Vec<Transaction>,
}

impl Block {
    /// Mines a block over `txs`: commits the Merkle root and searches nonces
    /// from zero until the header digest satisfies the difficulty predicate.
    ///
    /// An empty batch commits the all-zero root.
    pub fn mine(
        height: u64,
        prev_hash: Digest,
        txs: Vec<Transaction>,
        timestamp: SimTime,
        difficulty_bits: u32,
    ) -> Block {
        let root = if txs.is_empty() {
            Digest::ZERO
        } else {
            let leaves: Vec<[u8; TX_SIZE_BYTES]> = txs.iter().map(|tx| tx.encode()).collect();
            merkle_root(&leaves).expect("non-empty leaves")
        };
        let mut nonce = 0u64;
        loop {
            let digest = hash_bytes(&BlockHeader::preimage(
                height, &prev_hash, &root, timestamp, nonce,
            ));
            if digest.leading_zero_bits() >= difficulty_bits {
                return Block {
                    header: BlockHeader {
                        height,
                        prev_hash,
                        merkle_root: root,
                        timestamp,
                        nonce,
                        digest,
                    },
                    txs,
                };
            }
            nonce += 1;
        }
    }

    /// Recomputes the Merkle commitment over the carried transactions.
    pub fn recompute_merkle_root(&self) -> Digest {
        if self.txs.is_empty() {
            Digest::ZERO
        } else {
            let leaves: Vec<[u8; TX_SIZE_BYTES]> = self.txs.iter().map(|tx| tx.encode()).collect();
            merkle_root(&leaves).expect("non-empty leaves")
        }
    }

    /// Total serialized transaction bytes.
    pub fn tx_bytes(&self) -> u64 {
        (self.txs.len() * TX_SIZE_BYTES) as u64
    }

    /// Full structural validation of `self` as the successor of `prev`:
    /// height and prev_hash link, the Merkle root recomputes, the size bound
    /// holds, and the difficulty predicate holds. Returns a boolean verdict;
    /// callers treat `false` as a forged block.
    pub fn validate(&self, prev: &BlockHeader, params: &LedgerParams) -> bool {
        self.header.height == prev.height + 1
            && self.header.prev_hash == prev.digest
            && self.recompute_merkle_root() == self.header.merkle_root
            && self.tx_bytes() <= params.block_size_bytes
            && self.header.verify_pow(params.difficulty_bits)
    }

    /// Canonical serialization: header, digest, tx count, then the raw
    /// 400-byte records.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 + self.txs.len() * TX_SIZE_BYTES);
        self.header.encode_into(&mut out);
        out.extend_from_slice(&(self.txs.len() as u32).to_le_bytes());
        for tx in &self.txs {
            out.extend_from_slice(&tx.encode());
        }
        out
    }

    /// Strict decode; the carried header digest is kept as-is so tampering
    /// remains visible to [`Block::validate`].
    pub fn decode(bytes: &[u8]) -> Result<Block, BlockCodecError> {
        if bytes.len() < HEADER_LEN + 4 {
            return Err(BlockCodecError::Truncated(bytes.len()));
        }
        let header = BlockHeader::decode(&bytes[..HEADER_LEN]);
        let count =
            u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
        let body = &bytes[HEADER_LEN + 4..];
        let expected = count * TX_SIZE_BYTES;
        if body.len() < expected {
            return Err(BlockCodecError::Truncated(bytes.len()));
        }
        if body.len() > expected {
            return Err(BlockCodecError::TrailingBytes {
                extra: body.len() - expected,
            });
        }
        let mut txs = Vec::with_capacity(count);
        for index in 0..count {
            let record = &body[index * TX_SIZE_BYTES..(index + 1) * TX_SIZE_BYTES];
            let tx = Transaction::decode(record)
                .map_err(|source| BlockCodecError::Tx { index, source })?;
            txs.push(tx);
        }
        Ok(Block { header, txs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::identity::Identity;
    use crate::contracts::payload::{ImprintingContract, Payload};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn imprint_tx(seed: u64) -> Transaction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let admin = Identity::generate(&mut rng);
        let device = Identity::generate(&mut rng);
        Transaction::create(
            Payload::Imprint(ImprintingContract {
                device_id: device.id(),
                device_pubkey: *device.public_key(),
                admin_pubkey: *admin.public_key(),
            }),
            &admin,
        )
    }

    fn params() -> LedgerParams {
        LedgerParams::default()
    }

    #[test]
    fn mined_block_validates() {
        let genesis = Block::mine(0, Digest::ZERO, vec![], SimTime::ZERO, 8);
        assert!(genesis.header.verify_pow(8));
        let txs = vec![imprint_tx(1), imprint_tx(2), imprint_tx(3)];
        let block = Block::mine(
            1,
            genesis.header.digest,
            txs,
            SimTime::from_minutes(2.5),
            8,
        );
        assert!(block.validate(&genesis.header, &params()));
    }

    #[test]
    fn tampered_tx_byte_invalidates_block() {
        let genesis = Block::mine(0, Digest::ZERO, vec![], SimTime::ZERO, 8);
        let block = Block::mine(
            1,
            genesis.header.digest,
            vec![imprint_tx(1)],
            SimTime::from_minutes(2.5),
            8,
        );
        let mut bytes = block.encode();
        // Flip a byte inside the transaction region; the record still parses
        // (device ids are opaque) but the Merkle root no longer recomputes.
        bytes[HEADER_LEN + 4 + 33] ^= 0x01;
        let tampered = Block::decode(&bytes).unwrap();
        assert!(!tampered.validate(&genesis.header, &params()));
    }

    #[test]
    fn nonce_failing_difficulty_invalidates_block() {
        let genesis = Block::mine(0, Digest::ZERO, vec![], SimTime::ZERO, 8);
        let mut block = Block::mine(
            1,
            genesis.header.digest,
            vec![],
            SimTime::from_minutes(2.5),
            8,
        );
        // Re-seal the header honestly (digest recomputes) but with a nonce
        // that fails the difficulty predicate.
        loop {
            block.header.nonce += 1;
            let d = hash_bytes(&BlockHeader::preimage(
                block.header.height,
                &block.header.prev_hash,
                &block.header.merkle_root,
                block.header.timestamp,
                block.header.nonce,
            ));
            if d.leading_zero_bits() < 8 {
                block.header.digest = d;
                break;
            }
        }
        assert!(!block.validate(&genesis.header, &params()));
    }

    #[test]
    fn encode_decode_round_trip() {
        let genesis = Block::mine(0, Digest::ZERO, vec![], SimTime::ZERO, 8);
        let block = Block::mine(
            1,
            genesis.header.digest,
            vec![imprint_tx(1), imprint_tx(2)],
            SimTime::from_minutes(2.5),
            8,
        );
        let bytes = block.encode();
        let back = Block::decode(&bytes).unwrap();
        assert_eq!(back, block);
        assert_eq!(back.encode(), bytes);
    }

    #[test]
    fn truncated_or_padded_records_are_rejected() {
        let block = Block::mine(0, Digest::ZERO, vec![imprint_tx(1)], SimTime::ZERO, 8);
        let bytes = block.encode();
        assert!(matches!(
            Block::decode(&bytes[..bytes.len() - 1]),
            Err(BlockCodecError::Truncated(_))
        ));
        let mut padded = bytes.clone();
        padded.push(0);
        assert!(matches!(
            Block::decode(&padded),
            Err(BlockCodecError::TrailingBytes { extra: 1 })
        ));
    }
}
