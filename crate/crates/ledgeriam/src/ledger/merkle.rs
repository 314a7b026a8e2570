//! Merkle commitments over block transactions and compact membership proofs.
//!
//! Trees use the duplicate-last-node rule for odd layer widths, so a verifier
//! holding only a block header can check that a 400-byte transaction record
//! was committed by that header with `ceil(log2(n))` sibling digests.

use thiserror::Error;

use crate::digest::{hash_bytes, hash_pair, Digest};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MerkleError {
    #[error("cannot build a Merkle tree over an empty leaf list")]
    EmptyTree,
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
}

/// A compact membership proof: the sibling path from one leaf to the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleProof {
    pub leaf_index: usize,
    pub siblings: Vec<Digest>,
    pub root: Digest,
}

/// Root of the Merkle tree over `leaves`.
///
/// Each leaf is hashed once; interior nodes hash the concatenation of their
/// children; odd layers duplicate their last node.
pub fn merkle_root<L: AsRef<[u8]>>(leaves: &[L]) -> Result<Digest, MerkleError> {
    if leaves.is_empty() {
        return Err(MerkleError::EmptyTree);
    }
    let mut level: Vec<Digest> = leaves.iter().map(|l| hash_bytes(l.as_ref())).collect();
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().expect("level non-empty"));
        }
        level = level
            .chunks_exact(2)
            .map(|pair| hash_pair(&pair[0], &pair[1]))
            .collect();
    }
    Ok(level[0])
}

/// Membership proof for `leaves[index]`.
pub fn build_proof<L: AsRef<[u8]>>(leaves: &[L], index: usize) -> Result<MerkleProof, MerkleError> {
    if leaves.is_empty() {
        return Err(MerkleError::EmptyTree);
    }
    if index >= leaves.len() {
        return Err(MerkleError::IndexOutOfRange {
            index,
            len: leaves.len(),
        });
    }
    let mut level: Vec<Digest> = leaves.iter().map(|l| hash_bytes(l.as_ref())).collect();
    let mut siblings = Vec::new();
    let mut pos = index;
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().expect("level non-empty"));
        }
        siblings.push(level[pos ^ 1]);
        level = level
            .chunks_exact(2)
            .map(|pair| hash_pair(&pair[0], &pair[1]))
            .collect();
        pos /= 2;
    }
    Ok(MerkleProof {
        leaf_index: index,
        siblings,
        root: level[0],
    })
}

/// True iff folding `leaf` with the proof's siblings reproduces the root.
///
/// Pure and side-effect free; mismatches return `false` rather than erroring.
pub fn verify_proof(leaf: &[u8], proof: &MerkleProof) -> bool {
    let mut acc = hash_bytes(leaf);
    let mut pos = proof.leaf_index;
    for sibling in &proof.siblings {
        acc = if pos % 2 == 0 {
            hash_pair(&acc, sibling)
        } else {
            hash_pair(sibling, &acc)
        };
        pos /= 2;
    }
    acc == proof.root
}
