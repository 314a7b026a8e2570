//! Run traces: every executed, queued, or dropped event as a canonical
//! line, folded into a digest for determinism checks.

use sha2::{Digest as _, Sha256};

use crate::digest::Digest;
use crate::time::SimTime;

/// One trace entry. `kind` is one of: deliver, timer, chan-open,
/// chan-opened, chan-close, chan-queued, chan-queued-cut, chan-unroutable,
/// cut-start, cut-end, queued, dropped, dropped-in-flight, link-down,
/// unroutable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub at: SimTime,
    pub seq: u64,
    pub kind: &'static str,
    pub from: String,
    pub to: String,
    pub label: String,
    /// For deliveries: when the message left the sender.
    pub sent_at: Option<SimTime>,
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        let sent = match self.sent_at {
            Some(t) => t.millis().to_string(),
            None => "-".to_string(),
        };
        format!(
            "t={} seq={} kind={} from={} to={} sent={} label={}",
            self.at.millis(),
            self.seq,
            self.kind,
            self.from,
            self.to,
            sent,
            self.label
        )
    }
}

#[derive(Debug)]
pub(crate) struct Trace {
    hasher: Sha256,
    records: Vec<TraceRecord>,
    notes: Vec<String>,
}

impl Trace {
    pub(crate) fn new() -> Trace {
        Trace {
            hasher: Sha256::new(),
            records: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, record: TraceRecord) {
        self.hasher.update(record.to_line().as_bytes());
        self.hasher.update(b"\n");
        self.records.push(record);
    }

    pub(crate) fn note(&mut self, at: SimTime, node: String, line: String) {
        let full = format!("t={} node={} {}", at.millis(), node, line);
        self.hasher.update(full.as_bytes());
        self.hasher.update(b"\n");
        self.notes.push(full);
    }

    pub(crate) fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub(crate) fn notes(&self) -> &[String] {
        &self.notes
    }

    pub(crate) fn digest(&self) -> Digest {
        Digest(self.hasher.clone().finalize().into())
    }
}
