//! Creator-side contract operations.
//!
//! Each operation validates the caller's authority against a replayed
//! [`ContractState`] view and returns a signed, canonical transaction ready
//! for submission. The ledger re-runs the same admission rule against its
//! own state before mining, so a stale creator view cannot smuggle an
//! unauthorized record into a block.

use ed25519_dalek::VerifyingKey;

use crate::contracts::acl::Acl;
use crate::contracts::identity::{DeviceId, Identity};
use crate::contracts::payload::{
    AccessContract, ImprintingContract, OwnershipTransfer, Payload, Revocation,
};
use crate::contracts::state::{ContractError, ContractState};
use crate::digest::Digest;
use crate::ledger::tx::Transaction;
use crate::time::SimTime;

/// Builds the imprinting contract binding `device_pubkey` to
/// `admin_pubkey`, signed by the imprinter.
pub fn create_imprinting_contract(
    view: &ContractState,
    device_pubkey: &VerifyingKey,
    admin_pubkey: &VerifyingKey,
    imprinter: &Identity,
) -> Result<Transaction, ContractError> {
    let device_id = DeviceId::from_pubkey(device_pubkey);
    if view.is_imprinted(device_id, u64::MAX) {
        return Err(ContractError::AlreadyImprinted(device_id));
    }
    Ok(imprint_unchecked(device_pubkey, admin_pubkey, imprinter))
}

/// Builds an imprinting contract without consulting a chain view. Used by
/// imprinter nodes that track announced devices themselves; the ledger's
/// admission rule still enforces at most one imprint per device.
pub fn imprint_unchecked(
    device_pubkey: &VerifyingKey,
    admin_pubkey: &VerifyingKey,
    imprinter: &Identity,
) -> Transaction {
    Transaction::create(
        Payload::Imprint(ImprintingContract {
            device_id: DeviceId::from_pubkey(device_pubkey),
            device_pubkey: *device_pubkey,
            admin_pubkey: *admin_pubkey,
        }),
        imprinter,
    )
}

/// Transfers administrative rights over `device_id` to `new_admin_pubkey`.
/// `current_admin` must govern the device at `ref_height`.
pub fn transfer_ownership(
    view: &ContractState,
    device_id: DeviceId,
    new_admin_pubkey: &VerifyingKey,
    current_admin: &Identity,
    ref_height: u64,
) -> Result<Transaction, ContractError> {
    let tx = Transaction::create(
        Payload::Transfer(OwnershipTransfer {
            device_id,
            new_admin_pubkey: *new_admin_pubkey,
            ref_height,
        }),
        current_admin,
    );
    view.admit(&tx, ref_height)?;
    Ok(tx)
}

/// Grants `requestor_id` the given ACL over `provider_id`'s functions.
/// `admin` must govern the provider at `valid_from`.
pub fn create_grant(
    view: &ContractState,
    admin: &Identity,
    provider_id: DeviceId,
    requestor_id: DeviceId,
    acl: Acl,
    expiry: Option<SimTime>,
    valid_from: u64,
) -> Result<Transaction, ContractError> {
    let tx = Transaction::create(
        Payload::Grant(AccessContract {
            provider_id,
            requestor_id,
            acl,
            valid_from,
            expiry,
        }),
        admin,
    );
    view.admit(&tx, valid_from)?;
    Ok(tx)
}

/// Revokes the contract with digest `target`. `admin` must govern the
/// target's provider at `ref_height`.
pub fn create_revocation(
    view: &ContractState,
    admin: &Identity,
    target: Digest,
    ref_height: u64,
) -> Result<Transaction, ContractError> {
    let tx = Transaction::create(
        Payload::Revoke(Revocation { target, ref_height }),
        admin,
    );
    view.admit(&tx, ref_height)?;
    Ok(tx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity(seed: u64) -> Identity {
        Identity::generate(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn imprint_then_grant_then_revoke_flow() {
        let admin = identity(1);
        let device = identity(2);
        let requestor = identity(3);
        let mut state = ContractState::new();

        let ic = create_imprinting_contract(
            &state,
            device.public_key(),
            admin.public_key(),
            &admin,
        )
        .expect("fresh device imprints");
        state.apply_tx(1, 0, &ic);

        // Second imprint attempt for the same device fails.
        assert_eq!(
            create_imprinting_contract(&state, device.public_key(), admin.public_key(), &admin),
            Err(ContractError::AlreadyImprinted(device.id()))
        );

        let grant = create_grant(
            &state,
            &admin,
            device.id(),
            requestor.id(),
            Acl::from_slots(&[1]),
            None,
            1,
        )
        .expect("admin may grant");
        state.apply_tx(2, 0, &grant);
        assert!(state
            .resolve(device.id(), requestor.id(), 2, SimTime::ZERO)
            .is_some());

        let revocation = create_revocation(&state, &admin, grant.digest(), 2)
            .expect("admin may revoke its grant");
        state.apply_tx(3, 0, &revocation);
        assert!(state
            .resolve(device.id(), requestor.id(), 3, SimTime::ZERO)
            .is_none());
    }

    #[test]
    fn grant_by_non_admin_is_refused_at_creation() {
        let admin = identity(1);
        let device = identity(2);
        let mallory = identity(66);
        let mut state = ContractState::new();
        let ic =
            create_imprinting_contract(&state, device.public_key(), admin.public_key(), &admin)
                .unwrap();
        state.apply_tx(1, 0, &ic);
        assert_eq!(
            create_grant(
                &state,
                &mallory,
                device.id(),
                identity(3).id(),
                Acl::from_slots(&[0]),
                None,
                1,
            ),
            Err(ContractError::NotAuthorized)
        );
    }

    #[test]
    fn transfer_moves_granting_authority() {
        let a = identity(1);
        let b = identity(2);
        let device = identity(3);
        let requestor = identity(4);
        let mut state = ContractState::new();
        let ic = create_imprinting_contract(&state, device.public_key(), a.public_key(), &a).unwrap();
        state.apply_tx(1, 0, &ic);

        let handover = transfer_ownership(&state, device.id(), b.public_key(), &a, 1).unwrap();
        state.apply_tx(2, 0, &handover);

        // A lost authority, B gained it.
        assert_eq!(
            create_grant(
                &state,
                &a,
                device.id(),
                requestor.id(),
                Acl::from_slots(&[0]),
                None,
                2,
            ),
            Err(ContractError::NotAuthorized)
        );
        assert!(create_grant(
            &state,
            &b,
            device.id(),
            requestor.id(),
            Acl::from_slots(&[0]),
            None,
            2,
        )
        .is_ok());
    }
}
