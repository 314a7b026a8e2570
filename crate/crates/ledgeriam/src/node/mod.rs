//! Device state machines: ledger synchronization, the local contract cache,
//! the machine-to-machine handshake, and the freshness-threshold
//! authorization decision.

pub mod carrier;
pub mod decision;
pub mod device;
pub mod imprinter;
pub mod ledger_node;
pub mod messages;

pub use carrier::{CarrierNode, ForgedDispatch};
pub use decision::{Basis, DecisionRecord, Verdict};
pub use device::{CacheEntry, DeviceConfig, DeviceNode};
pub use imprinter::ImprinterNode;
pub use ledger_node::LedgerNode;
pub use messages::{Message, NodeAction, ProvenEvent, ScriptStep, SignedAccessRequest};

use serde::{Deserialize, Serialize};

/// How long a provider chases fresh ledger state before deciding.
///
/// Zero never waits (pure availability); `Unbounded` never falls back to
/// cache (pure consistency); a finite budget waits `min(budget, fetch
/// latency)` and then decides from verified cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", untagged)]
pub enum Freshness {
    /// Wait up to this many simulated milliseconds for fresh state.
    BudgetMs(u64),
    /// Consistency mode: never serve from cache.
    Unbounded(UnboundedTag),
}

/// Serde helper so scenario files can write `freshness = "unbounded"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnboundedTag {
    Unbounded,
}

impl Freshness {
    pub const AVAILABILITY: Freshness = Freshness::BudgetMs(0);
    pub const CONSISTENCY: Freshness = Freshness::Unbounded(UnboundedTag::Unbounded);

    pub fn budget_ms(&self) -> Option<u64> {
        match self {
            Freshness::BudgetMs(ms) => Some(*ms),
            Freshness::Unbounded(_) => None,
        }
    }
}

/// The consistency/availability knob of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePolicy {
    /// Freshness budget for authorization decisions.
    pub freshness: Freshness,
    /// Cached entries older than this are unusable; `None` means cache
    /// entries outlive partitions indefinitely.
    #[serde(default)]
    pub cache_ttl_min: Option<f64>,
}

impl NodePolicy {
    pub fn availability() -> NodePolicy {
        NodePolicy {
            freshness: Freshness::AVAILABILITY,
            cache_ttl_min: None,
        }
    }

    pub fn consistency() -> NodePolicy {
        NodePolicy {
            freshness: Freshness::CONSISTENCY,
            cache_ttl_min: None,
        }
    }

    pub fn bounded(budget_ms: u64) -> NodePolicy {
        NodePolicy {
            freshness: Freshness::BudgetMs(budget_ms),
            cache_ttl_min: None,
        }
    }
}

#[cfg(test)]
mod policy_tests {
    use super::*;

    #[test]
    fn freshness_budget_accessors() {
        assert_eq!(Freshness::AVAILABILITY.budget_ms(), Some(0));
        assert_eq!(Freshness::CONSISTENCY.budget_ms(), None);
        assert_eq!(Freshness::BudgetMs(4000).budget_ms(), Some(4000));
    }
}
