//! Device identities: an Ed25519 keypair plus the 160-bit identifier derived
//! from the public key.
//!
//! The private key never leaves the [`Identity`] value and is never part of
//! any ledger record; only the 32-byte public key and the derived id appear
//! on chain. Ed25519 signing is deterministic, which keeps golden traces
//! byte-stable across runs.

use std::fmt;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::digest::hash_bytes;

/// Byte width of a [`DeviceId`]: a 160-bit truncation of the public-key hash.
pub const DEVICE_ID_LEN: usize = 20;

/// Byte width of a serialized signature.
pub const SIGNATURE_LEN: usize = 64;

/// Byte width of a serialized public key.
pub const PUBKEY_LEN: usize = 32;

/// The 160-bit identifier of a device, derived from its public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceId(pub [u8; DEVICE_ID_LEN]);

impl DeviceId {
    /// Derives the identifier from a public key: the project hash of the key
    /// bytes, truncated to 160 bits.
    pub fn from_pubkey(pubkey: &VerifyingKey) -> DeviceId {
        let digest = hash_bytes(pubkey.as_bytes());
        let mut id = [0u8; DEVICE_ID_LEN];
        id.copy_from_slice(&digest.as_bytes()[..DEVICE_ID_LEN]);
        DeviceId(id)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Short prefix used in trace and decision lines.
    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Debug for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DeviceId({})", self.to_hex())
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// An actor principal: signing key, verification key, and derived id.
#[derive(Clone)]
pub struct Identity {
    signing: SigningKey,
    verifying: VerifyingKey,
    id: DeviceId,
}

impl Identity {
    /// Generates a fresh identity from seeded randomness.
    ///
    /// The same RNG state always yields the same identity.
    pub fn generate<R: RngCore>(rng: &mut R) -> Identity {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Identity::from_seed(seed)
    }

    pub fn from_seed(seed: [u8; 32]) -> Identity {
        let signing = SigningKey::from_bytes(&seed);
        let verifying = signing.verifying_key();
        let id = DeviceId::from_pubkey(&verifying);
        Identity {
            signing,
            verifying,
            id,
        }
    }

    pub fn id(&self) -> DeviceId {
        self.id
    }

    pub fn public_key(&self) -> &VerifyingKey {
        &self.verifying
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        self.signing.sign(message)
    }
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Never expose the signing key.
        write!(f, "Identity({})", self.id)
    }
}

/// Verifies `signature` over `message` under `pubkey`.
pub fn verify_signature(pubkey: &VerifyingKey, message: &[u8], signature: &Signature) -> bool {
    pubkey.verify(message, signature).is_ok()
}
