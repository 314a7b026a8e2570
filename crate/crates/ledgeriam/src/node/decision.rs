//! Access decisions and their exported log format.
//!
//! Every decision a node takes (or fails to obtain) is logged as one
//! structured text line so harness assertions and reports share a single
//! parseable record format.

use std::fmt;
use std::str::FromStr;

use crate::contracts::identity::DeviceId;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Granted,
    Denied,
    TimedOut,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Granted => "granted",
            Verdict::Denied => "denied",
            Verdict::TimedOut => "timed-out",
        }
    }
}

/// What state a decision was made from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Ledger state fetched and verified within the freshness budget.
    FreshLedger,
    /// Locally cached, Merkle-proven contract state.
    LocalCache,
    /// No state consulted (timeouts, malformed requests).
    None,
}

impl Basis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Basis::FreshLedger => "fresh-ledger",
            Basis::LocalCache => "local-cache",
            Basis::None => "-",
        }
    }
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRecord {
    pub at: SimTime,
    pub provider: DeviceId,
    pub requestor: DeviceId,
    pub slot: u8,
    pub verdict: Verdict,
    pub basis: Basis,
    pub as_of_height: u64,
    /// Simulated milliseconds between request arrival and decision.
    pub waited_ms: u64,
    /// uniquid for the direct M2M flow, traditional for the baseline
    /// fixture.
    pub flow: &'static str,
    /// Digest prefix of the contract the decision cites, or "-".
    pub contract: String,
    pub reason: String,
}

impl fmt::Display for DecisionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "decision t={} provider={} requestor={} slot={} verdict={} basis={} height={} waited={} flow={} contract={} reason={}",
            self.at.millis(),
            self.provider,
            self.requestor,
            self.slot,
            self.verdict.as_str(),
            self.basis.as_str(),
            self.as_of_height,
            self.waited_ms,
            self.flow,
            self.contract,
            self.reason,
        )
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct ParseDecisionError;

impl FromStr for DecisionRecord {
    type Err = ParseDecisionError;

    /// Parses a line produced by `Display`. Used by harness assertions so
    /// the exported format itself is what gets tested.
    fn from_str(s: &str) -> Result<DecisionRecord, ParseDecisionError> {
        let mut fields = std::collections::BTreeMap::new();
        let mut parts = s.split_whitespace();
        if parts.next() != Some("decision") {
            return Err(ParseDecisionError);
        }
        for part in parts {
            let (k, v) = part.split_once('=').ok_or(ParseDecisionError)?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or(ParseDecisionError);
        let device = |k: &str| -> Result<DeviceId, ParseDecisionError> {
            let hexstr = get(k)?;
            let bytes = hex::decode(hexstr).map_err(|_| ParseDecisionError)?;
            let arr: [u8; 20] = bytes.try_into().map_err(|_| ParseDecisionError)?;
            Ok(DeviceId(arr))
        };
        let verdict = match get("verdict")? {
            "granted" => Verdict::Granted,
            "denied" => Verdict::Denied,
            "timed-out" => Verdict::TimedOut,
            _ => return Err(ParseDecisionError),
        };
        let basis = match get("basis")? {
            "fresh-ledger" => Basis::FreshLedger,
            "local-cache" => Basis::LocalCache,
            "-" => Basis::None,
            _ => return Err(ParseDecisionError),
        };
        let flow = match get("flow")? {
            "uniquid" => "uniquid",
            "traditional" => "traditional",
            _ => return Err(ParseDecisionError),
        };
        Ok(DecisionRecord {
            at: SimTime::from_millis(get("t")?.parse().map_err(|_| ParseDecisionError)?),
            provider: device("provider")?,
            requestor: device("requestor")?,
            slot: get("slot")?.parse().map_err(|_| ParseDecisionError)?,
            verdict,
            basis,
            as_of_height: get("height")?.parse().map_err(|_| ParseDecisionError)?,
            waited_ms: get("waited")?.parse().map_err(|_| ParseDecisionError)?,
            flow,
            contract: get("contract")?.to_string(),
            reason: get("reason")?.to_string(),
        })
    }
}
