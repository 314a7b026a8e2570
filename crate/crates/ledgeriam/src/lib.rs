//! Ledger-anchored identity and access management for machine-to-machine
//! networks.
//!
//! Devices hold keypair identities bound to an administrator through an
//! imprinting ceremony recorded on a simulated proof-of-work ledger. Access
//! rights are granted, revoked, and transferred through fixed-size ledger
//! transactions; providers verify a requestor's rights either against fresh
//! ledger state or against a locally cached contract proven by a Merkle
//! membership path — a per-node threshold decides how long to chase
//! freshness before conceding to the cache (or refusing outright).
//!
//! Everything runs over a deterministic discrete-event network simulator so
//! partition experiments replay byte-identically from a seed.
//!
//! Module map:
//! - [`ledger`]: transaction pool, block assembly, Merkle proofs, PoW checks.
//! - [`contracts`]: identities, grants, revocations, ownership, resolution.
//! - [`node`]: the device state machine — sync, cache, handshake, decisions.
//! - [`netsim`]: the event loop — links, latency, channel caps, partitions.

pub mod contracts;
pub mod digest;
pub mod ledger;
pub mod netsim;
pub mod node;
pub mod time;

pub use digest::{Digest, HASH_NAME};
pub use time::SimTime;
