//! Wire messages exchanged between simulated nodes.
//!
//! One enum covers the whole protocol surface: enrolment announcements,
//! ledger sync, block dispatch, the three-message access handshake, and the
//! traditional-IAM baseline fixture the harness compares against. Timers are
//! self-addressed messages and never cross links.

use ed25519_dalek::{Signature, VerifyingKey};

use crate::contracts::identity::{verify_signature, DeviceId, Identity};
use crate::digest::Digest;
use crate::ledger::{Block, BlockHeader, MerkleProof, Transaction};
use crate::netsim::{NodeId, SimMessage};
use crate::node::decision::{Basis, Verdict};
use crate::time::SimTime;

/// A transaction plus the Merkle path anchoring it in a specific block, as
/// served to SPV-style nodes.
#[derive(Debug, Clone)]
pub struct ProvenEvent {
    pub height: u64,
    pub index: u32,
    pub tx: Transaction,
    pub proof: MerkleProof,
}

/// The signed third message of the access handshake.
#[derive(Debug, Clone)]
pub struct SignedAccessRequest {
    pub rid: u64,
    pub requestor: DeviceId,
    pub requestor_pubkey: VerifyingKey,
    pub provider: DeviceId,
    pub slot: u8,
    pub nonce: u64,
    pub signature: Signature,
}

impl SignedAccessRequest {
    fn signing_bytes(
        rid: u64,
        requestor: &DeviceId,
        provider: &DeviceId,
        slot: u8,
        nonce: u64,
    ) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(64);
        bytes.extend_from_slice(b"access-request-v1");
        bytes.extend_from_slice(&rid.to_le_bytes());
        bytes.extend_from_slice(&requestor.0);
        bytes.extend_from_slice(&provider.0);
        bytes.push(slot);
        bytes.extend_from_slice(&nonce.to_le_bytes());
        bytes
    }

    pub fn sign(
        identity: &Identity,
        rid: u64,
        provider: DeviceId,
        slot: u8,
        nonce: u64,
    ) -> SignedAccessRequest {
        let requestor = identity.id();
        let bytes = Self::signing_bytes(rid, &requestor, &provider, slot, nonce);
        SignedAccessRequest {
            rid,
            requestor,
            requestor_pubkey: *identity.public_key(),
            provider,
            slot,
            nonce,
            signature: identity.sign(&bytes),
        }
    }

    /// Checks the requestor id binds to the carried key and the signature
    /// covers every negotiated field.
    pub fn verify(&self) -> bool {
        if DeviceId::from_pubkey(&self.requestor_pubkey) != self.requestor {
            return false;
        }
        let bytes =
            Self::signing_bytes(self.rid, &self.requestor, &self.provider, self.slot, self.nonce);
        verify_signature(&self.requestor_pubkey, &bytes, &self.signature)
    }
}

#[derive(Debug, Clone)]
pub enum Message {
    // ---- enrolment ceremony ----
    /// A freshly generated identity announcing itself to an imprinter.
    Announce {
        device_pubkey: VerifyingKey,
        generated_at: SimTime,
    },
    SubmitTx {
        tx: Transaction,
    },
    SubmitAck {
        digest: Digest,
        accepted: bool,
        reason: String,
    },

    // ---- SPV sync ----
    GetState {
        req: u64,
        provider: DeviceId,
        from_height: u64,
    },
    State {
        req: u64,
        headers: Vec<BlockHeader>,
        events: Vec<ProvenEvent>,
    },
    /// New-block header announcement on a pub/sub topic.
    HeaderAnnounce {
        header: BlockHeader,
    },

    // ---- full-block sync and dispatch ----
    GetBlocks {
        req: u64,
        from_height: u64,
    },
    Blocks {
        req: u64,
        blocks: Vec<Block>,
    },
    Dispatch {
        req: u64,
        blocks: Vec<Block>,
    },
    DispatchAck {
        req: u64,
        accepted: u32,
        rejected: u32,
    },

    // ---- access handshake (request, challenge, signed response) ----
    Hello {
        rid: u64,
        requestor: DeviceId,
        slot: u8,
    },
    Challenge {
        rid: u64,
        nonce: u64,
    },
    Access(SignedAccessRequest),
    Decision {
        rid: u64,
        verdict: Verdict,
        basis: Basis,
        as_of_height: u64,
        reason: String,
    },

    // ---- traditional-IAM baseline fixture ----
    AuthRequest {
        rid: u64,
        client: DeviceId,
        provider: DeviceId,
        slot: u8,
    },
    AuthToken {
        rid: u64,
        token: u64,
    },
    TradRequest {
        rid: u64,
        client: DeviceId,
        slot: u8,
        token: u64,
    },
    ValidateToken {
        token: u64,
    },
    TokenStatus {
        token: u64,
        valid: bool,
    },
    TradDecision {
        rid: u64,
        granted: bool,
    },

    // ---- timers (self-addressed) ----
    MineTick,
    GenTick,
    RefreshTick,
    FetchDeadline {
        req: u64,
    },
    FetchRetry {
        req: u64,
    },
    RequestTimeout {
        rid: u64,
    },
    ScriptStep {
        step: usize,
    },
}

impl SimMessage for Message {
    fn label(&self) -> String {
        match self {
            Message::Announce { .. } => "announce".into(),
            Message::SubmitTx { tx } => format!("submit-tx {}", tx.kind().name()),
            Message::SubmitAck { accepted, .. } => format!("submit-ack ok={accepted}"),
            Message::GetState { req, .. } => format!("get-state r{req}"),
            Message::State { req, headers, events } => {
                format!("state r{req} h={} ev={}", headers.len(), events.len())
            }
            Message::HeaderAnnounce { header } => format!("header-announce h={}", header.height),
            Message::GetBlocks { req, from_height } => {
                format!("get-blocks r{req} from={from_height}")
            }
            Message::Blocks { req, blocks } => format!("blocks r{req} n={}", blocks.len()),
            Message::Dispatch { req, blocks } => format!("dispatch r{req} n={}", blocks.len()),
            Message::DispatchAck { req, accepted, rejected } => {
                format!("dispatch-ack r{req} ok={accepted} bad={rejected}")
            }
            Message::Hello { rid, slot, .. } => format!("hello rid={rid} slot={slot}"),
            Message::Challenge { rid, .. } => format!("challenge rid={rid}"),
            Message::Access(sar) => format!("access rid={} slot={}", sar.rid, sar.slot),
            Message::Decision { rid, verdict, basis, .. } => {
                format!("decision rid={rid} {} {}", verdict.as_str(), basis.as_str())
            }
            Message::AuthRequest { rid, .. } => format!("auth-request rid={rid}"),
            Message::AuthToken { rid, .. } => format!("auth-token rid={rid}"),
            Message::TradRequest { rid, .. } => format!("trad-request rid={rid}"),
            Message::ValidateToken { token } => format!("validate-token {token}"),
            Message::TokenStatus { token, valid } => format!("token-status {token} ok={valid}"),
            Message::TradDecision { rid, granted } => {
                format!("trad-decision rid={rid} ok={granted}")
            }
            Message::MineTick => "mine-tick".into(),
            Message::GenTick => "gen-tick".into(),
            Message::RefreshTick => "refresh-tick".into(),
            Message::FetchDeadline { req } => format!("fetch-deadline r{req}"),
            Message::FetchRetry { req } => format!("fetch-retry r{req}"),
            Message::RequestTimeout { rid } => format!("request-timeout rid={rid}"),
            Message::ScriptStep { step } => format!("script-step {step}"),
        }
    }
}

/// One scripted action a node performs at a fixed simulated time.
#[derive(Debug, Clone)]
pub struct ScriptStep {
    pub at: SimTime,
    pub action: NodeAction,
}

#[derive(Debug, Clone)]
pub enum NodeAction {
    /// Run the direct M2M handshake against a provider.
    RequestAccess {
        provider_node: NodeId,
        provider: DeviceId,
        slot: u8,
    },
    /// Run the traditional auth-server flow against a provider.
    BaselineRequest {
        provider_node: NodeId,
        provider: DeviceId,
        slot: u8,
    },
    /// Trigger an immediate ledger fetch.
    SyncNow,
    /// Push every locally held block to a target node.
    DispatchTo { target: NodeId },
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn signed_request_verifies_and_binds_fields() {
        let identity = Identity::generate(&mut ChaCha8Rng::seed_from_u64(1));
        let provider = Identity::generate(&mut ChaCha8Rng::seed_from_u64(2)).id();
        let sar = SignedAccessRequest::sign(&identity, 7, provider, 3, 99);
        assert!(sar.verify());

        // Any field change breaks the signature.
        let mut tampered = sar.clone();
        tampered.slot = 4;
        assert!(!tampered.verify());
        let mut tampered = sar.clone();
        tampered.nonce = 100;
        assert!(!tampered.verify());

        // A swapped key breaks the id binding.
        let other = Identity::generate(&mut ChaCha8Rng::seed_from_u64(3));
        let mut tampered = sar;
        tampered.requestor_pubkey = *other.public_key();
        assert!(!tampered.verify());
    }
}
