//! The resolved view of mined contract events.
//!
//! [`ContractState`] replays an ordered stream of `(height, intra-block
//! index)` contract events and answers the two questions the rest of the
//! system asks: who administers a device at a given height, and which access
//! contract currently governs a (provider, requestor) pair. It also hosts
//! the admission rule a miner applies before accepting a transaction into a
//! block.

use std::collections::BTreeMap;

use ed25519_dalek::VerifyingKey;
use thiserror::Error;

use crate::contracts::identity::DeviceId;
use crate::contracts::payload::{AccessContract, Payload, TxKind};
use crate::digest::Digest;
use crate::ledger::tx::Transaction;
use crate::time::SimTime;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContractError {
    #[error("signature does not verify against the carried signer key")]
    BadSignature,
    #[error("device {0} is already imprinted")]
    AlreadyImprinted(DeviceId),
    #[error("device {0} is not imprinted")]
    NotImprinted(DeviceId),
    #[error("signer is not the governing administrator")]
    NotAuthorized,
    #[error("unknown contract {0}")]
    UnknownContract(Digest),
    #[error("imprinting contracts are not revocable; ownership is transferred instead")]
    NotRevocable(Digest),
    #[error("reference height {ref_height} is ahead of the ledger tip {tip}")]
    FutureReference { ref_height: u64, tip: u64 },
    #[error("device id does not recompute from the carried public key")]
    IdMismatch,
}

/// One mined contract event, addressed by its chain position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractEvent {
    pub height: u64,
    pub index: u32,
    pub tx_digest: Digest,
    pub signer: VerifyingKey,
    pub payload: Payload,
}

impl ContractEvent {
    pub fn from_tx(height: u64, index: u32, tx: &Transaction) -> ContractEvent {
        ContractEvent {
            height,
            index,
            tx_digest: tx.digest(),
            signer: *tx.signer(),
            payload: tx.payload().clone(),
        }
    }

    fn position(&self) -> (u64, u32) {
        (self.height, self.index)
    }
}

/// The grant currently governing a (provider, requestor) pair, with its
/// chain position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveGrant {
    pub contract: AccessContract,
    pub height: u64,
    pub index: u32,
    pub tx_digest: Digest,
}

/// Replayed contract state over an ordered event stream.
#[derive(Debug, Clone, Default)]
pub struct ContractState {
    events: Vec<ContractEvent>,
    imprints: BTreeMap<DeviceId, usize>,
    grants_by_digest: BTreeMap<Digest, usize>,
    /// target digest → height of the earliest mined revocation.
    revoked_at: BTreeMap<Digest, u64>,
}

impl ContractState {
    pub fn new() -> ContractState {
        ContractState::default()
    }

    pub fn events(&self) -> &[ContractEvent] {
        &self.events
    }

    /// Appends one mined event. Events must arrive in nondecreasing
    /// (height, index) order.
    pub fn apply(&mut self, event: ContractEvent) {
        debug_assert!(
            self.events
                .last()
                .map(|prev| prev.position() < event.position())
                .unwrap_or(true),
            "contract events must be applied in chain order"
        );
        let idx = self.events.len();
        match &event.payload {
            Payload::Imprint(ic) => {
                self.imprints.entry(ic.device_id).or_insert(idx);
            }
            Payload::Grant(_) => {
                self.grants_by_digest.insert(event.tx_digest, idx);
            }
            Payload::Revoke(rev) => {
                self.revoked_at.entry(rev.target).or_insert(event.height);
            }
            Payload::Transfer(_) => {}
        }
        self.events.push(event);
    }

    pub fn apply_tx(&mut self, height: u64, index: u32, tx: &Transaction) {
        self.apply(ContractEvent::from_tx(height, index, tx));
    }

    /// True iff `device` has an imprinting contract mined at or below
    /// `at_height`.
    pub fn is_imprinted(&self, device: DeviceId, at_height: u64) -> bool {
        self.imprints
            .get(&device)
            .map(|&idx| self.events[idx].height <= at_height)
            .unwrap_or(false)
    }

    /// The administrator key governing `device` at `at_height`: the
    /// imprinting contract's admin key, then each ownership transfer mined
    /// at or below `at_height`, applied in chain order.
    pub fn admin_of(&self, device: DeviceId, at_height: u64) -> Option<VerifyingKey> {
        let imprint_idx = *self.imprints.get(&device)?;
        let imprint = &self.events[imprint_idx];
        if imprint.height > at_height {
            return None;
        }
        let mut admin = match &imprint.payload {
            Payload::Imprint(ic) => ic.admin_pubkey,
            _ => unreachable!("imprint index points at an imprint event"),
        };
        for event in &self.events[imprint_idx..] {
            if event.height > at_height {
                break;
            }
            if let Payload::Transfer(tr) = &event.payload {
                if tr.device_id == device {
                    admin = tr.new_admin_pubkey;
                }
            }
        }
        Some(admin)
    }

    /// The grant event with transaction digest `digest`, if one was mined.
    pub fn grant_event(&self, digest: &Digest) -> Option<&ContractEvent> {
        self.grants_by_digest.get(digest).map(|&idx| &self.events[idx])
    }

    /// Height of the earliest revocation of `target` mined at or below
    /// `at_height`, if any.
    pub fn revoked_height(&self, target: Digest, at_height: u64) -> Option<u64> {
        self.revoked_at
            .get(&target)
            .copied()
            .filter(|&h| h <= at_height)
    }

    /// The access contract governing `(provider, requestor)` at
    /// `(at_height, now)`: the latest grant by (block height, intra-block
    /// index) that is neither revoked at `at_height` nor expired at `now`.
    /// `None` when every grant is revoked, expired, or absent.
    pub fn resolve(
        &self,
        provider: DeviceId,
        requestor: DeviceId,
        at_height: u64,
        now: SimTime,
    ) -> Option<EffectiveGrant> {
        self.events
            .iter()
            .rev()
            .filter(|event| event.height <= at_height)
            .find_map(|event| match &event.payload {
                Payload::Grant(grant)
                    if grant.provider_id == provider
                        && grant.requestor_id == requestor
                        && self.revoked_height(event.tx_digest, at_height).is_none()
                        && !grant.expired_at(now) =>
                {
                    Some(EffectiveGrant {
                        contract: grant.clone(),
                        height: event.height,
                        index: event.index,
                        tx_digest: event.tx_digest,
                    })
                }
                _ => None,
            })
    }

    /// Admission rule applied before a transaction enters the mempool or a
    /// block: the signature must verify, reference heights must not be ahead
    /// of `tip`, and the signer must hold the authority the payload claims.
    pub fn admit(&self, tx: &Transaction, tip: u64) -> Result<(), ContractError> {
        if !tx.verify_signature() {
            return Err(ContractError::BadSignature);
        }
        match tx.payload() {
            Payload::Imprint(ic) => {
                if DeviceId::from_pubkey(&ic.device_pubkey) != ic.device_id {
                    return Err(ContractError::IdMismatch);
                }
                if self.is_imprinted(ic.device_id, tip) {
                    return Err(ContractError::AlreadyImprinted(ic.device_id));
                }
                Ok(())
            }
            Payload::Grant(grant) => {
                check_height(grant.valid_from, tip)?;
                self.check_admin(grant.provider_id, grant.valid_from, tx.signer())
            }
            Payload::Revoke(rev) => {
                check_height(rev.ref_height, tip)?;
                let grant_idx = match self.grants_by_digest.get(&rev.target) {
                    Some(&idx) => idx,
                    None => {
                        // Distinguish a mis-aimed revocation of an imprint
                        // from a dangling target.
                        let is_imprint = self
                            .events
                            .iter()
                            .any(|e| e.tx_digest == rev.target && e.payload.kind() == TxKind::Imprint);
                        return Err(if is_imprint {
                            ContractError::NotRevocable(rev.target)
                        } else {
                            ContractError::UnknownContract(rev.target)
                        });
                    }
                };
                let provider = match &self.events[grant_idx].payload {
                    Payload::Grant(g) => g.provider_id,
                    _ => unreachable!("grant index points at a grant event"),
                };
                self.check_admin(provider, rev.ref_height, tx.signer())
            }
            Payload::Transfer(tr) => {
                check_height(tr.ref_height, tip)?;
                self.check_admin(tr.device_id, tr.ref_height, tx.signer())
            }
        }
    }

    fn check_admin(
        &self,
        device: DeviceId,
        at_height: u64,
        signer: &VerifyingKey,
    ) -> Result<(), ContractError> {
        match self.admin_of(device, at_height) {
            None => Err(ContractError::NotImprinted(device)),
            Some(admin) if admin == *signer => Ok(()),
            Some(_) => Err(ContractError::NotAuthorized),
        }
    }
}

fn check_height(ref_height: u64, tip: u64) -> Result<(), ContractError> {
    if ref_height > tip {
        Err(ContractError::FutureReference { ref_height, tip })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::acl::Acl;
    use crate::contracts::identity::Identity;
    use crate::contracts::payload::{ImprintingContract, OwnershipTransfer, Revocation};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity(seed: u64) -> Identity {
        Identity::generate(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn grant_tx(
        admin: &Identity,
        provider: DeviceId,
        requestor: DeviceId,
        valid_from: u64,
        expiry: Option<SimTime>,
    ) -> Transaction {
        Transaction::create(
            Payload::Grant(AccessContract {
                provider_id: provider,
                requestor_id: requestor,
                acl: Acl::from_slots(&[0]),
                valid_from,
                expiry,
            }),
            admin,
        )
    }

    fn imprint_tx(admin: &Identity, device: &Identity) -> Transaction {
        Transaction::create(
            Payload::Imprint(ImprintingContract {
                device_id: device.id(),
                device_pubkey: *device.public_key(),
                admin_pubkey: *admin.public_key(),
            }),
            admin,
        )
    }

    struct Fixture {
        state: ContractState,
        admin: Identity,
        provider: Identity,
        requestor: Identity,
        grant_digest: Digest,
    }

    /// Imprint at height 1, grant at height 3, revoke at height 5.
    fn grant_revoke_fixture() -> Fixture {
        let admin = identity(1);
        let provider = identity(2);
        let requestor = identity(3);
        let mut state = ContractState::new();
        state.apply_tx(1, 0, &imprint_tx(&admin, &provider));
        let grant = grant_tx(&admin, provider.id(), requestor.id(), 1, None);
        let grant_digest = grant.digest();
        state.apply_tx(3, 0, &grant);
        let revoke = Transaction::create(
            Payload::Revoke(Revocation {
                target: grant_digest,
                ref_height: 4,
            }),
            &admin,
        );
        state.apply_tx(5, 0, &revoke);
        Fixture {
            state,
            admin,
            provider,
            requestor,
            grant_digest,
        }
    }

    #[test]
    fn grant_visible_before_revocation_height() {
        let f = grant_revoke_fixture();
        let eff = f
            .state
            .resolve(f.provider.id(), f.requestor.id(), 4, SimTime::ZERO)
            .expect("grant effective at height 4");
        assert_eq!(eff.height, 3);
        assert_eq!(eff.tx_digest, f.grant_digest);
    }

    #[test]
    fn grant_gone_at_revocation_height() {
        let f = grant_revoke_fixture();
        assert_eq!(
            f.state
                .resolve(f.provider.id(), f.requestor.id(), 5, SimTime::ZERO),
            None
        );
    }

    #[test]
    fn later_grant_wins() {
        let admin = identity(1);
        let provider = identity(2);
        let requestor = identity(3);
        let mut state = ContractState::new();
        state.apply_tx(1, 0, &imprint_tx(&admin, &provider));
        let g1 = grant_tx(&admin, provider.id(), requestor.id(), 1, None);
        let g2 = grant_tx(
            &admin,
            provider.id(),
            requestor.id(),
            1,
            Some(SimTime::from_millis(u64::MAX)),
        );
        state.apply_tx(3, 0, &g1);
        state.apply_tx(6, 0, &g2);
        let eff = state
            .resolve(provider.id(), requestor.id(), 7, SimTime::ZERO)
            .expect("effective grant");
        assert_eq!(eff.height, 6);
        assert_eq!(eff.tx_digest, g2.digest());
    }

    #[test]
    fn expired_grant_does_not_resolve() {
        let admin = identity(1);
        let provider = identity(2);
        let requestor = identity(3);
        let mut state = ContractState::new();
        state.apply_tx(1, 0, &imprint_tx(&admin, &provider));
        let expiry = SimTime::from_minutes(60.0);
        state.apply_tx(
            2,
            0,
            &grant_tx(&admin, provider.id(), requestor.id(), 1, Some(expiry)),
        );
        assert!(state
            .resolve(provider.id(), requestor.id(), 10, SimTime::from_minutes(59.0))
            .is_some());
        assert!(state
            .resolve(provider.id(), requestor.id(), 10, expiry)
            .is_none());
    }

    #[test]
    fn ownership_transfer_round_trip() {
        let a = identity(1);
        let b = identity(2);
        let device = identity(3);
        let mut state = ContractState::new();
        state.apply_tx(1, 0, &imprint_tx(&a, &device));
        assert_eq!(state.admin_of(device.id(), 1), Some(*a.public_key()));

        // A transfers to B.
        let to_b = Transaction::create(
            Payload::Transfer(OwnershipTransfer {
                device_id: device.id(),
                new_admin_pubkey: *b.public_key(),
                ref_height: 1,
            }),
            &a,
        );
        state.admit(&to_b, 1).expect("A governs the device");
        state.apply_tx(2, 0, &to_b);
        assert_eq!(state.admin_of(device.id(), 2), Some(*b.public_key()));

        // B transfers back to A.
        let to_a = Transaction::create(
            Payload::Transfer(OwnershipTransfer {
                device_id: device.id(),
                new_admin_pubkey: *a.public_key(),
                ref_height: 2,
            }),
            &b,
        );
        state.admit(&to_a, 2).expect("B governs the device now");
        state.apply_tx(3, 0, &to_a);
        assert_eq!(state.admin_of(device.id(), 3), Some(*a.public_key()));
        // Earlier heights still resolve the historical admin.
        assert_eq!(state.admin_of(device.id(), 2), Some(*b.public_key()));
    }

    #[test]
    fn non_admin_transfer_is_rejected() {
        let a = identity(1);
        let c = identity(9);
        let device = identity(3);
        let mut state = ContractState::new();
        state.apply_tx(1, 0, &imprint_tx(&a, &device));
        let attempt = Transaction::create(
            Payload::Transfer(OwnershipTransfer {
                device_id: device.id(),
                new_admin_pubkey: *c.public_key(),
                ref_height: 1,
            }),
            &c,
        );
        assert_eq!(state.admit(&attempt, 1), Err(ContractError::NotAuthorized));
    }

    #[test]
    fn admission_rejects_the_expected_cases() {
        let f = grant_revoke_fixture();
        let tip = 5;

        // Duplicate imprint.
        let dup = imprint_tx(&f.admin, &f.provider);
        assert_eq!(
            f.state.admit(&dup, tip),
            Err(ContractError::AlreadyImprinted(f.provider.id()))
        );

        // Grant for an unimprinted provider.
        let stranger = identity(50);
        let bad = grant_tx(&f.admin, stranger.id(), f.requestor.id(), 1, None);
        assert_eq!(
            f.state.admit(&bad, tip),
            Err(ContractError::NotImprinted(stranger.id()))
        );

        // Grant signed by a non-admin.
        let mallory = identity(66);
        let forged = grant_tx(&mallory, f.provider.id(), f.requestor.id(), 1, None);
        assert_eq!(f.state.admit(&forged, tip), Err(ContractError::NotAuthorized));

        // Future reference height.
        let early = grant_tx(&f.admin, f.provider.id(), f.requestor.id(), 40, None);
        assert_eq!(
            f.state.admit(&early, tip),
            Err(ContractError::FutureReference {
                ref_height: 40,
                tip
            })
        );

        // Revocation of a dangling digest.
        let dangling = Transaction::create(
            Payload::Revoke(Revocation {
                target: crate::digest::hash_bytes(b"nope"),
                ref_height: 1,
            }),
            &f.admin,
        );
        assert!(matches!(
            f.state.admit(&dangling, tip),
            Err(ContractError::UnknownContract(_))
        ));

        // Revocation aimed at an imprinting contract.
        let ic_digest = f.state.events()[0].tx_digest;
        let decommission = Transaction::create(
            Payload::Revoke(Revocation {
                target: ic_digest,
                ref_height: 1,
            }),
            &f.admin,
        );
        assert_eq!(
            f.state.admit(&decommission, tip),
            Err(ContractError::NotRevocable(ic_digest))
        );
    }
}
