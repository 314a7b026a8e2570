//! Contract bodies carried by ledger transactions.
//!
//! These are the semantic records of the identity lifecycle: imprinting a
//! device under an administrator, granting a requestor an ACL over a
//! provider's functions, revoking a grant, and transferring administrative
//! ownership. Their canonical 400-byte wire layout lives in the ledger
//! module.

use ed25519_dalek::VerifyingKey;

use crate::contracts::acl::Acl;
use crate::contracts::identity::DeviceId;
use crate::digest::Digest;
use crate::time::SimTime;

/// Transaction kind discriminant. Tag 0 is deliberately invalid so an
/// all-zero record can never parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum TxKind {
    Imprint = 1,
    Grant = 2,
    Revoke = 3,
    TransferOwnership = 4,
}

impl TxKind {
    pub fn from_tag(tag: u8) -> Option<TxKind> {
        match tag {
            1 => Some(TxKind::Imprint),
            2 => Some(TxKind::Grant),
            3 => Some(TxKind::Revoke),
            4 => Some(TxKind::TransferOwnership),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TxKind::Imprint => "imprint",
            TxKind::Grant => "grant",
            TxKind::Revoke => "revoke",
            TxKind::TransferOwnership => "transfer",
        }
    }
}

/// Links a device to the public key of its administrator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImprintingContract {
    pub device_id: DeviceId,
    pub device_pubkey: VerifyingKey,
    pub admin_pubkey: VerifyingKey,
}

/// Grants `requestor_id` an ACL over `provider_id`'s function slots.
///
/// `valid_from` is the chain height at which the signing administrator's
/// authority is resolved; it must not be ahead of the ledger tip when the
/// transaction is admitted. `expiry` is simulated-time based; `None` means
/// perpetual until revoked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessContract {
    pub provider_id: DeviceId,
    pub requestor_id: DeviceId,
    pub acl: Acl,
    pub valid_from: u64,
    pub expiry: Option<SimTime>,
}

impl AccessContract {
    /// True once the contract's expiry has passed at `now`.
    pub fn expired_at(&self, now: SimTime) -> bool {
        match self.expiry {
            Some(expiry) => now >= expiry,
            None => false,
        }
    }
}

/// Revokes the contract whose transaction digest is `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Revocation {
    pub target: Digest,
    /// Height at which the signer's administrative authority is resolved.
    pub ref_height: u64,
}

/// Replaces a device's administrator key with that of the new owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwnershipTransfer {
    pub device_id: DeviceId,
    pub new_admin_pubkey: VerifyingKey,
    /// Height at which the signer's administrative authority is resolved.
    pub ref_height: u64,
}

/// The contract body of a transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Imprint(ImprintingContract),
    Grant(AccessContract),
    Revoke(Revocation),
    Transfer(OwnershipTransfer),
}

impl Payload {
    pub fn kind(&self) -> TxKind {
        match self {
            Payload::Imprint(_) => TxKind::Imprint,
            Payload::Grant(_) => TxKind::Grant,
            Payload::Revoke(_) => TxKind::Revoke,
            Payload::Transfer(_) => TxKind::TransferOwnership,
        }
    }
}
