//! Identity lifecycle and authorization semantics: keypair identities,
//! imprinting contracts, ownership transfer, access grants with ACLs,
//! revocations, and the resolution rule deciding which contract currently
//! governs a (provider, requestor) pair.

pub mod acl;
pub mod identity;
pub mod ops;
pub mod payload;
pub mod state;

pub use acl::{Acl, ACL_SLOTS};
pub use identity::{verify_signature, DeviceId, Identity};
pub use ops::{
    create_grant, create_imprinting_contract, create_revocation, imprint_unchecked,
    transfer_ownership,
};
pub use payload::{
    AccessContract, ImprintingContract, OwnershipTransfer, Payload, Revocation, TxKind,
};
pub use state::{ContractError, ContractEvent, ContractState, EffectiveGrant};
