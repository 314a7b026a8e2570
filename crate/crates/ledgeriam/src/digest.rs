//! 256-bit digests and the project-wide hash function.
//!
//! Every hashed artifact in this crate (transactions, block headers, Merkle
//! nodes) uses the same function, named by [`HASH_NAME`] in the header of all
//! emitted files so external tooling can verify them.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

/// Name of the hash function, embedded in the config header of every
/// emitted artifact (chain exports, reports).
pub const HASH_NAME: &str = "sha-256";

/// Byte width of a [`Digest`].
pub const DIGEST_LEN: usize = 32;

/// A 256-bit hash value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    /// The all-zero digest, used as the previous-hash anchor of the genesis
    /// block and as the Merkle commitment of an empty block.
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Digest> {
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; DIGEST_LEN] = bytes.try_into().ok()?;
        Some(Digest(arr))
    }

    /// Number of leading zero bits, the proof-of-work difficulty measure.
    pub fn leading_zero_bits(&self) -> u32 {
        let mut bits = 0;
        for byte in self.0 {
            if byte == 0 {
                bits += 8;
            } else {
                bits += byte.leading_zeros();
                break;
            }
        }
        bits
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Hash a byte string with the project hash function.
pub fn hash_bytes(bytes: &[u8]) -> Digest {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    Digest(hasher.finalize().into())
}

/// Hash the concatenation of two digests, the Merkle interior-node rule.
pub fn hash_pair(left: &Digest, right: &Digest) -> Digest {
    let mut hasher = Sha256::new();
    hasher.update(left.0);
    hasher.update(right.0);
    Digest(hasher.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_zero_bits_counts_across_bytes() {
        let mut d = Digest::ZERO;
        assert_eq!(d.leading_zero_bits(), 256);
        d.0[0] = 0x01;
        assert_eq!(d.leading_zero_bits(), 7);
        d.0[0] = 0x00;
        d.0[1] = 0x80;
        assert_eq!(d.leading_zero_bits(), 8);
        d.0[1] = 0x20;
        assert_eq!(d.leading_zero_bits(), 10);
    }

    #[test]
    fn hex_round_trip() {
        let d = hash_bytes(b"abc");
        assert_eq!(Digest::from_hex(&d.to_hex()), Some(d));
        // Known SHA-256 vector.
        assert_eq!(
            d.to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
