//! The canonical fixed-size transaction record.
//!
//! Every ledger record is exactly [`TX_SIZE_BYTES`] bytes: a one-byte kind
//! tag, the signer's public key, kind-specific fields at fixed offsets,
//! deterministic zero padding, and a trailing 64-byte signature over
//! everything before it. Decoding is strict — wrong length, unknown tag,
//! invalid keys, or non-zero padding are all rejected — so encoding and
//! decoding are mutually inverse on the valid set and records round-trip
//! bit-exactly.

use ed25519_dalek::{Signature, VerifyingKey};
use thiserror::Error;

use crate::contracts::acl::Acl;
use crate::contracts::identity::{
    verify_signature, DeviceId, Identity, DEVICE_ID_LEN, PUBKEY_LEN, SIGNATURE_LEN,
};
use crate::contracts::payload::{
    AccessContract, ImprintingContract, OwnershipTransfer, Payload, Revocation, TxKind,
};
use crate::digest::{hash_bytes, Digest, DIGEST_LEN};
use crate::time::SimTime;

/// Serialized size of every transaction.
pub const TX_SIZE_BYTES: usize = 400;

/// End of the signed region; the signature occupies the remaining 64 bytes.
const SIGNED_LEN: usize = TX_SIZE_BYTES - SIGNATURE_LEN;

const KIND_OFFSET: usize = 0;
const SIGNER_OFFSET: usize = 1;
const FIELDS_OFFSET: usize = SIGNER_OFFSET + PUBKEY_LEN; // 33

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TxCodecError {
    #[error("transaction record must be exactly {TX_SIZE_BYTES} bytes, got {0}")]
    WrongLength(usize),
    #[error("unknown transaction kind tag {0}")]
    UnknownKind(u8),
    #[error("invalid public key bytes")]
    BadPublicKey,
    #[error("non-canonical padding (non-zero byte in reserved region)")]
    NonCanonicalPadding,
    #[error("invalid expiry flag {0}")]
    BadExpiryFlag(u8),
}

/// A signed ledger record carrying one contract body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    payload: Payload,
    signer: VerifyingKey,
    signature: Signature,
}

impl Transaction {
    /// Builds and signs a transaction; the signature covers the kind tag,
    /// signer key, fields, and padding.
    pub fn create(payload: Payload, signer: &Identity) -> Transaction {
        let mut record = [0u8; TX_SIZE_BYTES];
        write_unsigned(&mut record, &payload, signer.public_key());
        let signature = signer.sign(&record[..SIGNED_LEN]);
        Transaction {
            payload,
            signer: *signer.public_key(),
            signature,
        }
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn kind(&self) -> TxKind {
        self.payload.kind()
    }

    pub fn signer(&self) -> &VerifyingKey {
        &self.signer
    }

    /// Canonical 400-byte serialization.
    pub fn encode(&self) -> [u8; TX_SIZE_BYTES] {
        let mut record = [0u8; TX_SIZE_BYTES];
        write_unsigned(&mut record, &self.payload, &self.signer);
        record[SIGNED_LEN..].copy_from_slice(&self.signature.to_bytes());
        record
    }

    /// Strict decode of a canonical record.
    pub fn decode(bytes: &[u8]) -> Result<Transaction, TxCodecError> {
        if bytes.len() != TX_SIZE_BYTES {
            return Err(TxCodecError::WrongLength(bytes.len()));
        }
        let kind =
            TxKind::from_tag(bytes[KIND_OFFSET]).ok_or(TxCodecError::UnknownKind(bytes[0]))?;
        let signer = read_pubkey(&bytes[SIGNER_OFFSET..SIGNER_OFFSET + PUBKEY_LEN])?;
        let fields = &bytes[FIELDS_OFFSET..SIGNED_LEN];
        let payload = decode_fields(kind, fields)?;
        let mut sig_bytes = [0u8; SIGNATURE_LEN];
        sig_bytes.copy_from_slice(&bytes[SIGNED_LEN..]);
        let signature = Signature::from_bytes(&sig_bytes);
        Ok(Transaction {
            payload,
            signer,
            signature,
        })
    }

    /// True iff the signature verifies against the signer key carried in the
    /// record.
    pub fn verify_signature(&self) -> bool {
        let record = self.encode();
        verify_signature(&self.signer, &record[..SIGNED_LEN], &self.signature)
    }

    /// Digest of the canonical serialization; the record's identity for
    /// deduplication and revocation targeting.
    pub fn digest(&self) -> Digest {
        hash_bytes(&self.encode())
    }
}

fn write_unsigned(record: &mut [u8; TX_SIZE_BYTES], payload: &Payload, signer: &VerifyingKey) {
    record[KIND_OFFSET] = payload.kind() as u8;
    record[SIGNER_OFFSET..SIGNER_OFFSET + PUBKEY_LEN].copy_from_slice(signer.as_bytes());
    let fields = &mut record[FIELDS_OFFSET..SIGNED_LEN];
    encode_fields(payload, fields);
}

// Field offsets below are relative to the kind-specific region.

fn encode_fields(payload: &Payload, out: &mut [u8]) {
    match payload {
        Payload::Imprint(ic) => {
            out[0..20].copy_from_slice(&ic.device_id.0);
            out[20..52].copy_from_slice(ic.device_pubkey.as_bytes());
            out[52..84].copy_from_slice(ic.admin_pubkey.as_bytes());
        }
        Payload::Grant(grant) => {
            out[0..20].copy_from_slice(&grant.provider_id.0);
            out[20..40].copy_from_slice(&grant.requestor_id.0);
            out[40..44].copy_from_slice(&grant.acl.bits().to_le_bytes());
            out[44..52].copy_from_slice(&grant.valid_from.to_le_bytes());
            if let Some(expiry) = grant.expiry {
                out[52] = 1;
                out[53..61].copy_from_slice(&expiry.millis().to_le_bytes());
            }
        }
        Payload::Revoke(rev) => {
            out[0..32].copy_from_slice(rev.target.as_bytes());
            out[32..40].copy_from_slice(&rev.ref_height.to_le_bytes());
        }
        Payload::Transfer(tr) => {
            out[0..20].copy_from_slice(&tr.device_id.0);
            out[20..52].copy_from_slice(tr.new_admin_pubkey.as_bytes());
            out[52..60].copy_from_slice(&tr.ref_height.to_le_bytes());
        }
    }
}

fn decode_fields(kind: TxKind, bytes: &[u8]) -> Result<Payload, TxCodecError> {
    let payload = match kind {
        TxKind::Imprint => {
            check_padding(&bytes[84..])?;
            Payload::Imprint(ImprintingContract {
                device_id: read_device_id(&bytes[0..20]),
                device_pubkey: read_pubkey(&bytes[20..52])?,
                admin_pubkey: read_pubkey(&bytes[52..84])?,
            })
        }
        TxKind::Grant => {
            check_padding(&bytes[61..])?;
            let expiry = match bytes[52] {
                0 => {
                    check_padding(&bytes[53..61])?;
                    None
                }
                1 => Some(SimTime::from_millis(read_u64(&bytes[53..61]))),
                other => return Err(TxCodecError::BadExpiryFlag(other)),
            };
            Payload::Grant(AccessContract {
                provider_id: read_device_id(&bytes[0..20]),
                requestor_id: read_device_id(&bytes[20..40]),
                acl: Acl(u32::from_le_bytes(bytes[40..44].try_into().unwrap())),
                valid_from: read_u64(&bytes[44..52]),
                expiry,
            })
        }
        TxKind::Revoke => {
            check_padding(&bytes[40..])?;
            let mut target = [0u8; DIGEST_LEN];
            target.copy_from_slice(&bytes[0..32]);
            Payload::Revoke(Revocation {
                target: Digest(target),
                ref_height: read_u64(&bytes[32..40]),
            })
        }
        TxKind::TransferOwnership => {
            check_padding(&bytes[60..])?;
            Payload::Transfer(OwnershipTransfer {
                device_id: read_device_id(&bytes[0..20]),
                new_admin_pubkey: read_pubkey(&bytes[20..52])?,
                ref_height: read_u64(&bytes[52..60]),
            })
        }
    };
    Ok(payload)
}

fn read_device_id(bytes: &[u8]) -> DeviceId {
    let mut id = [0u8; DEVICE_ID_LEN];
    id.copy_from_slice(bytes);
    DeviceId(id)
}

fn read_pubkey(bytes: &[u8]) -> Result<VerifyingKey, TxCodecError> {
    let arr: [u8; PUBKEY_LEN] = bytes.try_into().map_err(|_| TxCodecError::BadPublicKey)?;
    VerifyingKey::from_bytes(&arr).map_err(|_| TxCodecError::BadPublicKey)
}

fn read_u64(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(bytes.try_into().unwrap())
}

fn check_padding(bytes: &[u8]) -> Result<(), TxCodecError> {
    if bytes.iter().all(|&b| b == 0) {
        Ok(())
    } else {
        Err(TxCodecError::NonCanonicalPadding)
    }
}
