//! The SPV-style device node.
//!
//! A device stores block headers and the contract events relevant to itself
//! (never the whole chain), each event carrying a Merkle path to a validated
//! header. As a provider it answers the three-message access handshake: on a
//! signed request it chases fresh ledger state for up to its freshness
//! budget, then decides — from the fresh state if the fetch completed, from
//! the proven local cache if the budget ran out, or not at all under a pure
//! consistency policy. No grant is ever issued without a verifying Merkle
//! proof against a validated header.
//!
//! The same type acts as a requestor (driven by scripted actions) and can
//! ingest full blocks pushed by a carrier node, validating each one.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};

use crate::contracts::identity::{DeviceId, Identity};
use crate::contracts::payload::Payload;
use crate::contracts::state::{ContractState, EffectiveGrant};
use crate::digest::{hash_bytes, Digest};
use crate::ledger::{build_proof, verify_proof, Block, BlockHeader, LedgerParams, MerkleProof, Transaction, TX_SIZE_BYTES};
use crate::netsim::{Actor, Ctx, NodeId};
use crate::node::decision::{Basis, DecisionRecord, Verdict};
use crate::node::messages::{Message, NodeAction, ProvenEvent, ScriptStep, SignedAccessRequest};
use crate::node::NodePolicy;
use crate::time::SimTime;

/// Static configuration of a device node.
#[derive(Debug, Clone)]
pub struct DeviceConfig {
    pub policy: NodePolicy,
    pub params: LedgerParams,
    /// Full node answering `GetState` fetches, when reachable.
    pub ledger_peer: Option<NodeId>,
    /// Re-send interval for an unanswered fetch (covers requests lost to a
    /// cut while in flight).
    pub fetch_retry_ms: u64,
    /// Requestor-side patience before logging a timed-out request.
    pub request_timeout_ms: u64,
    /// Periodic background cache refresh; `None` disables it.
    pub refresh_interval_ms: Option<u64>,
    /// Fetch fresh state whenever a new block header is announced.
    pub sync_on_announce: bool,
    /// Auth server of the traditional-IAM baseline fixture.
    pub auth_server: Option<NodeId>,
    pub script: Vec<ScriptStep>,
}

impl Default for DeviceConfig {
    fn default() -> DeviceConfig {
        DeviceConfig {
            policy: NodePolicy::availability(),
            params: LedgerParams::default(),
            ledger_peer: None,
            fetch_retry_ms: 10_000,
            request_timeout_ms: 60_000,
            refresh_interval_ms: None,
            sync_on_announce: false,
            auth_server: None,
            script: Vec::new(),
        }
    }
}

/// A verified cache entry: the effective grant for one requestor, the raw
/// record it came from, and the Merkle path anchoring it.
#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub grant: EffectiveGrant,
    pub tx: Transaction,
    pub proof: MerkleProof,
    pub cached_at: SimTime,
}

#[derive(Debug, Clone)]
struct PendingChallenge {
    rid: u64,
    requestor: DeviceId,
    slot: u8,
    node: NodeId,
}

#[derive(Debug, Clone)]
struct PendingAuth {
    node: NodeId,
    sar: SignedAccessRequest,
    arrived_at: SimTime,
}

#[derive(Debug, Clone)]
struct OpenRequest {
    provider_node: NodeId,
    provider: DeviceId,
    slot: u8,
    flow: &'static str,
}

#[derive(Debug, Clone)]
struct PendingValidation {
    rid: u64,
    node: NodeId,
    client: DeviceId,
    slot: u8,
    arrived_at: SimTime,
}

pub struct DeviceNode {
    identity: Identity,
    cfg: DeviceConfig,
    headers: Vec<BlockHeader>,
    /// Height through which relevant events are known to be complete.
    synced_height: Option<u64>,
    last_synced_at: Option<SimTime>,
    events: BTreeMap<(u64, u32), (Transaction, MerkleProof)>,
    cache: BTreeMap<DeviceId, CacheEntry>,
    // provider side
    nonce_counter: u64,
    challenges: BTreeMap<u64, PendingChallenge>,
    used_nonces: BTreeSet<u64>,
    pending_auth: BTreeMap<u64, PendingAuth>,
    next_req: u64,
    // requestor side
    next_rid: u64,
    open_requests: BTreeMap<u64, OpenRequest>,
    // baseline fixture
    pending_validations: BTreeMap<u64, PendingValidation>,
    decisions: Vec<DecisionRecord>,
    outcomes: Vec<(u64, Verdict, Basis)>,
}

impl DeviceNode {
    pub fn new(identity: Identity, cfg: DeviceConfig) -> DeviceNode {
        DeviceNode {
            identity,
            cfg,
            headers: Vec::new(),
            synced_height: None,
            last_synced_at: None,
            events: BTreeMap::new(),
            cache: BTreeMap::new(),
            nonce_counter: 0,
            challenges: BTreeMap::new(),
            used_nonces: BTreeSet::new(),
            pending_auth: BTreeMap::new(),
            next_req: 0,
            next_rid: 0,
            open_requests: BTreeMap::new(),
            pending_validations: BTreeMap::new(),
            decisions: Vec::new(),
            outcomes: Vec::new(),
        }
    }

    pub fn id(&self) -> DeviceId {
        self.identity.id()
    }

    pub fn identity(&self) -> &Identity {
        &self.identity
    }

    /// Decisions this node issued (as provider) or timed out on (as
    /// requestor).
    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    /// Requestor-side outcomes by request id.
    pub fn outcomes(&self) -> &[(u64, Verdict, Basis)] {
        &self.outcomes
    }

    pub fn synced_height(&self) -> Option<u64> {
        self.synced_height
    }

    pub fn header_count(&self) -> usize {
        self.headers.len()
    }

    pub fn cache_entry(&self, requestor: &DeviceId) -> Option<&CacheEntry> {
        self.cache.get(requestor)
    }

    fn derive_nonce(&mut self) -> u64 {
        self.nonce_counter += 1;
        let mut bytes = Vec::with_capacity(28);
        bytes.extend_from_slice(&self.identity.id().0);
        bytes.extend_from_slice(&self.nonce_counter.to_le_bytes());
        let digest = hash_bytes(&bytes);
        u64::from_le_bytes(digest.as_bytes()[..8].try_into().expect("8 bytes"))
    }

    fn fetch_from_height(&self) -> u64 {
        self.synced_height.map(|h| h + 1).unwrap_or(0)
    }

    fn send_fetch(&mut self, req: u64, ctx: &mut Ctx<'_, Message>) {
        if let Some(peer) = self.cfg.ledger_peer {
            ctx.send(
                peer,
                Message::GetState {
                    req,
                    provider: self.identity.id(),
                    from_height: self.fetch_from_height(),
                },
            );
        }
    }

    fn start_fetch(&mut self, ctx: &mut Ctx<'_, Message>) -> u64 {
        self.next_req += 1;
        let req = self.next_req;
        self.send_fetch(req, ctx);
        ctx.schedule_self(self.cfg.fetch_retry_ms, Message::FetchRetry { req });
        req
    }

    /// Header extension rule shared by sync, announcements, and dispatch.
    fn accept_header(&mut self, header: BlockHeader) -> bool {
        let expect = self.headers.len() as u64;
        if header.height != expect {
            return false;
        }
        let ok = match self.headers.last() {
            Some(prev) => prev.accepts_child(&header, self.cfg.params.difficulty_bits),
            None => {
                header.prev_hash == Digest::ZERO
                    && header.verify_pow(self.cfg.params.difficulty_bits)
            }
        };
        if ok {
            self.headers.push(header);
        }
        ok
    }

    /// Verifies and stores fetched state. Returns the covered tip height.
    fn ingest_state(&mut self, headers: Vec<BlockHeader>, events: Vec<ProvenEvent>) -> Option<u64> {
        let response_tip = headers.last().map(|h| h.height);
        for header in headers {
            if (header.height as usize) < self.headers.len() {
                continue; // already held (e.g. via announcement)
            }
            if !self.accept_header(header) {
                break;
            }
        }
        for ev in events {
            let Some(header) = self.headers.get(ev.height as usize) else {
                continue;
            };
            let record = ev.tx.encode();
            if ev.proof.leaf_index == ev.index as usize
                && ev.proof.root == header.merkle_root
                && verify_proof(&record, &ev.proof)
            {
                self.events.insert((ev.height, ev.index), (ev.tx, ev.proof));
            }
        }
        let covered = match response_tip {
            // An empty response means nothing newer than what we asked
            // from; the round trip itself still confirms freshness.
            None => self.synced_height,
            Some(tip) => (self.headers.len() as u64)
                .checked_sub(1)
                .map(|held| tip.min(held)),
        };
        self.synced_height = self.synced_height.max(covered);
        self.synced_height
    }

    fn rebuild_state(&self) -> ContractState {
        let mut state = ContractState::new();
        for ((height, index), (tx, _)) in &self.events {
            state.apply_tx(*height, *index, tx);
        }
        state
    }

    /// Re-resolves the effective contract for every requestor seen in the
    /// event log, storing grant, record, and proof.
    fn refresh_cache(&mut self, now: SimTime) {
        let state = self.rebuild_state();
        let tip = match self.synced_height {
            Some(h) => h,
            None => return,
        };
        let me = self.identity.id();
        let requestors: BTreeSet<DeviceId> = self
            .events
            .values()
            .filter_map(|(tx, _)| match tx.payload() {
                Payload::Grant(g) if g.provider_id == me => Some(g.requestor_id),
                _ => None,
            })
            .collect();
        for requestor in requestors {
            match state.resolve(me, requestor, tip, now) {
                Some(grant) => {
                    let key = (grant.height, grant.index);
                    if let Some((tx, proof)) = self.events.get(&key) {
                        self.cache.insert(
                            requestor,
                            CacheEntry {
                                grant,
                                tx: tx.clone(),
                                proof: proof.clone(),
                                cached_at: now,
                            },
                        );
                    }
                }
                None => {
                    self.cache.remove(&requestor);
                }
            }
        }
    }

    /// The proof gate: an entry is usable only if its Merkle path verifies
    /// against a locally validated header, it is within any cache TTL, and
    /// the contract itself is unexpired.
    fn usable_entry(&self, requestor: &DeviceId, now: SimTime) -> Result<&CacheEntry, &'static str> {
        let entry = self.cache.get(requestor).ok_or("no-contract")?;
        if let Some(ttl_min) = self.cfg.policy.cache_ttl_min {
            let ttl_ms = SimTime::from_minutes(ttl_min).millis();
            if now.saturating_sub(entry.cached_at) > ttl_ms {
                return Err("cache-expired");
            }
        }
        if entry.grant.contract.expired_at(now) {
            return Err("contract-expired");
        }
        let header = self
            .headers
            .get(entry.grant.height as usize)
            .ok_or("proof-unanchored")?;
        if entry.proof.root != header.merkle_root || !verify_proof(&entry.tx.encode(), &entry.proof)
        {
            return Err("proof-invalid");
        }
        Ok(entry)
    }

    fn log_decision(&mut self, record: DecisionRecord, ctx: &mut Ctx<'_, Message>) {
        ctx.note(record.to_string());
        self.decisions.push(record);
    }

    fn decide(&mut self, basis: Basis, pending: PendingAuth, ctx: &mut Ctx<'_, Message>) {
        let now = ctx.now();
        let waited = now.saturating_sub(pending.arrived_at);
        let as_of_height = self.synced_height.unwrap_or(0);
        let (verdict, reason, contract) = match self.usable_entry(&pending.sar.requestor, now) {
            Ok(entry) if entry.grant.contract.acl.permits(pending.sar.slot) => (
                Verdict::Granted,
                "ok",
                entry.grant.tx_digest.to_hex()[..12].to_string(),
            ),
            Ok(entry) => (
                Verdict::Denied,
                "slot-not-granted",
                entry.grant.tx_digest.to_hex()[..12].to_string(),
            ),
            Err(reason) => (Verdict::Denied, reason, "-".to_string()),
        };
        let record = DecisionRecord {
            at: now,
            provider: self.identity.id(),
            requestor: pending.sar.requestor,
            slot: pending.sar.slot,
            verdict,
            basis,
            as_of_height,
            waited_ms: waited,
            flow: "uniquid",
            contract,
            reason: reason.to_string(),
        };
        self.log_decision(record, ctx);
        ctx.send(
            pending.node,
            Message::Decision {
                rid: pending.sar.rid,
                verdict,
                basis,
                as_of_height,
                reason: reason.to_string(),
            },
        );
    }

    fn deny_malformed(
        &mut self,
        node: NodeId,
        sar: &SignedAccessRequest,
        reason: &'static str,
        ctx: &mut Ctx<'_, Message>,
    ) {
        let record = DecisionRecord {
            at: ctx.now(),
            provider: self.identity.id(),
            requestor: sar.requestor,
            slot: sar.slot,
            verdict: Verdict::Denied,
            basis: Basis::None,
            as_of_height: self.synced_height.unwrap_or(0),
            waited_ms: 0,
            flow: "uniquid",
            contract: "-".to_string(),
            reason: reason.to_string(),
        };
        self.log_decision(record, ctx);
        ctx.send(
            node,
            Message::Decision {
                rid: sar.rid,
                verdict: Verdict::Denied,
                basis: Basis::None,
                as_of_height: self.synced_height.unwrap_or(0),
                reason: reason.to_string(),
            },
        );
    }

    fn handle_access(&mut self, from: NodeId, sar: SignedAccessRequest, ctx: &mut Ctx<'_, Message>) {
        let challenge = match self.challenges.remove(&sar.nonce) {
            Some(c) => c,
            None => {
                let reason = if self.used_nonces.contains(&sar.nonce) {
                    "nonce-replayed"
                } else {
                    "unknown-nonce"
                };
                self.deny_malformed(from, &sar, reason, ctx);
                return;
            }
        };
        self.used_nonces.insert(sar.nonce);
        if challenge.rid != sar.rid
            || challenge.requestor != sar.requestor
            || challenge.slot != sar.slot
            || challenge.node != from
        {
            self.deny_malformed(from, &sar, "challenge-mismatch", ctx);
            return;
        }
        if !sar.verify() {
            self.deny_malformed(from, &sar, "bad-signature", ctx);
            return;
        }
        let pending = PendingAuth {
            node: from,
            sar,
            arrived_at: ctx.now(),
        };
        match self.cfg.policy.freshness.budget_ms() {
            Some(0) => {
                // Pure availability: never wait for the ledger.
                self.decide(Basis::LocalCache, pending, ctx);
            }
            budget => {
                let req = self.start_fetch(ctx);
                self.pending_auth.insert(req, pending);
                if let Some(ms) = budget {
                    ctx.schedule_self(ms, Message::FetchDeadline { req });
                }
            }
        }
    }

    fn handle_state(
        &mut self,
        req: u64,
        headers: Vec<BlockHeader>,
        events: Vec<ProvenEvent>,
        ctx: &mut Ctx<'_, Message>,
    ) {
        let now = ctx.now();
        let covered = self.ingest_state(headers, events);
        self.last_synced_at = Some(now);
        self.refresh_cache(now);
        ctx.note(format!(
            "sync tip={} via=fetch",
            covered.map(|h| h.to_string()).unwrap_or_else(|| "-".into())
        ));
        if let Some(pending) = self.pending_auth.remove(&req) {
            self.decide(Basis::FreshLedger, pending, ctx);
        }
    }

    fn handle_dispatch(
        &mut self,
        from: NodeId,
        req: u64,
        blocks: Vec<Block>,
        ctx: &mut Ctx<'_, Message>,
    ) {
        let now = ctx.now();
        let mut accepted = 0u32;
        let mut rejected = 0u32;
        let me = self.identity.id();
        for block in blocks {
            if (block.header.height as usize) < self.headers.len() {
                continue; // already held; not a transfer
            }
            let valid = match self.headers.last() {
                Some(prev) => block.validate(prev, &self.cfg.params),
                None => {
                    block.header.height == 0
                        && block.header.prev_hash == Digest::ZERO
                        && block.recompute_merkle_root() == block.header.merkle_root
                        && block.tx_bytes() <= self.cfg.params.block_size_bytes
                        && block.header.verify_pow(self.cfg.params.difficulty_bits)
                }
            };
            if !valid {
                rejected += 1;
                continue;
            }
            let height = block.header.height;
            let leaves: Vec<[u8; TX_SIZE_BYTES]> = block.txs.iter().map(|tx| tx.encode()).collect();
            for (index, tx) in block.txs.iter().enumerate() {
                let relevant = match tx.payload() {
                    Payload::Grant(g) => g.provider_id == me,
                    Payload::Revoke(rev) => self
                        .events
                        .values()
                        .any(|(stored, _)| stored.digest() == rev.target),
                    _ => false,
                };
                if relevant {
                    let proof = build_proof(&leaves, index).expect("index in range");
                    self.events
                        .insert((height, index as u32), (tx.clone(), proof));
                }
            }
            self.accept_header(block.header);
            self.synced_height = Some(height);
            accepted += 1;
        }
        if accepted > 0 {
            self.last_synced_at = Some(now);
            self.refresh_cache(now);
            ctx.note(format!(
                "sync tip={} via=dispatch",
                self.synced_height.unwrap_or(0)
            ));
        }
        ctx.send(
            from,
            Message::DispatchAck {
                req,
                accepted,
                rejected,
            },
        );
    }

    fn run_action(&mut self, action: NodeAction, ctx: &mut Ctx<'_, Message>) {
        match action {
            NodeAction::RequestAccess {
                provider_node,
                provider,
                slot,
            } => {
                self.next_rid += 1;
                let rid = self.next_rid;
                self.open_requests.insert(
                    rid,
                    OpenRequest {
                        provider_node,
                        provider,
                        slot,
                        flow: "uniquid",
                    },
                );
                ctx.send(
                    provider_node,
                    Message::Hello {
                        rid,
                        requestor: self.identity.id(),
                        slot,
                    },
                );
                ctx.schedule_self(self.cfg.request_timeout_ms, Message::RequestTimeout { rid });
            }
            NodeAction::BaselineRequest {
                provider_node,
                provider,
                slot,
            } => {
                let Some(auth_server) = self.cfg.auth_server else {
                    return;
                };
                self.next_rid += 1;
                let rid = self.next_rid;
                self.open_requests.insert(
                    rid,
                    OpenRequest {
                        provider_node,
                        provider,
                        slot,
                        flow: "traditional",
                    },
                );
                ctx.send(
                    auth_server,
                    Message::AuthRequest {
                        rid,
                        client: self.identity.id(),
                        provider,
                        slot,
                    },
                );
                ctx.schedule_self(self.cfg.request_timeout_ms, Message::RequestTimeout { rid });
            }
            NodeAction::SyncNow => {
                self.start_fetch(ctx);
            }
            NodeAction::DispatchTo { .. } => {
                // Carrier-only action; devices hold no full blocks.
            }
        }
    }
}

impl Actor<Message> for DeviceNode {
    fn on_start(&mut self, ctx: &mut Ctx<'_, Message>) {
        let script = self.cfg.script.clone();
        for (step, s) in script.iter().enumerate() {
            ctx.schedule_self(s.at.millis(), Message::ScriptStep { step });
        }
        if let Some(interval) = self.cfg.refresh_interval_ms {
            ctx.schedule_self(interval, Message::RefreshTick);
        }
    }

    fn on_message(&mut self, from: NodeId, msg: Message, ctx: &mut Ctx<'_, Message>) {
        match msg {
            Message::Hello {
                rid,
                requestor,
                slot,
            } => {
                let nonce = self.derive_nonce();
                self.challenges.insert(
                    nonce,
                    PendingChallenge {
                        rid,
                        requestor,
                        slot,
                        node: from,
                    },
                );
                ctx.send(from, Message::Challenge { rid, nonce });
            }
            Message::Challenge { rid, nonce } => {
                let Some(entry) = self.open_requests.get(&rid) else {
                    return;
                };
                if entry.provider_node != from {
                    return;
                }
                let sar = SignedAccessRequest::sign(
                    &self.identity,
                    rid,
                    entry.provider,
                    entry.slot,
                    nonce,
                );
                ctx.send(from, Message::Access(sar));
            }
            Message::Access(sar) => self.handle_access(from, sar, ctx),
            Message::Decision {
                rid,
                verdict,
                basis,
                ..
            } => {
                if self.open_requests.remove(&rid).is_some() {
                    self.outcomes.push((rid, verdict, basis));
                    ctx.note(format!(
                        "outcome rid={rid} verdict={} basis={}",
                        verdict.as_str(),
                        basis.as_str()
                    ));
                }
            }
            Message::State {
                req,
                headers,
                events,
            } => self.handle_state(req, headers, events, ctx),
            Message::HeaderAnnounce { header } => {
                let extended = self.accept_header(header);
                if extended && self.cfg.sync_on_announce {
                    self.start_fetch(ctx);
                }
            }
            Message::Dispatch { req, blocks } => self.handle_dispatch(from, req, blocks, ctx),
            // ---- baseline fixture, provider side ----
            Message::TradRequest {
                rid,
                client,
                slot,
                token,
            } => {
                let Some(auth_server) = self.cfg.auth_server else {
                    return;
                };
                self.pending_validations.insert(
                    token,
                    PendingValidation {
                        rid,
                        node: from,
                        client,
                        slot,
                        arrived_at: ctx.now(),
                    },
                );
                ctx.send(auth_server, Message::ValidateToken { token });
            }
            Message::TokenStatus { token, valid } => {
                let Some(pv) = self.pending_validations.remove(&token) else {
                    return;
                };
                let verdict = if valid { Verdict::Granted } else { Verdict::Denied };
                let record = DecisionRecord {
                    at: ctx.now(),
                    provider: self.identity.id(),
                    requestor: pv.client,
                    slot: pv.slot,
                    verdict,
                    basis: Basis::None,
                    as_of_height: 0,
                    waited_ms: ctx.now().saturating_sub(pv.arrived_at),
                    flow: "traditional",
                    contract: "-".to_string(),
                    reason: "token".to_string(),
                };
                self.log_decision(record, ctx);
                ctx.send(
                    pv.node,
                    Message::TradDecision {
                        rid: pv.rid,
                        granted: valid,
                    },
                );
            }
            // ---- baseline fixture, client side ----
            Message::AuthToken { rid, token } => {
                let Some(entry) = self.open_requests.get(&rid) else {
                    return;
                };
                ctx.send(
                    entry.provider_node,
                    Message::TradRequest {
                        rid,
                        client: self.identity.id(),
                        slot: entry.slot,
                        token,
                    },
                );
            }
            Message::TradDecision { rid, granted } => {
                if self.open_requests.remove(&rid).is_some() {
                    let verdict = if granted { Verdict::Granted } else { Verdict::Denied };
                    self.outcomes.push((rid, verdict, Basis::None));
                    ctx.note(format!(
                        "outcome rid={rid} verdict={} basis=- flow=traditional",
                        verdict.as_str()
                    ));
                }
            }
            _ => {}
        }
    }

    fn on_timer(&mut self, msg: Message, ctx: &mut Ctx<'_, Message>) {
        match msg {
            Message::ScriptStep { step } => {
                let action = self.cfg.script[step].action.clone();
                self.run_action(action, ctx);
            }
            Message::FetchDeadline { req } => {
                if let Some(pending) = self.pending_auth.remove(&req) {
                    self.decide(Basis::LocalCache, pending, ctx);
                }
            }
            Message::FetchRetry { req } => {
                if self.pending_auth.contains_key(&req) {
                    self.send_fetch(req, ctx);
                    ctx.schedule_self(self.cfg.fetch_retry_ms, Message::FetchRetry { req });
                }
            }
            Message::RefreshTick => {
                self.start_fetch(ctx);
                if let Some(interval) = self.cfg.refresh_interval_ms {
                    ctx.schedule_self(interval, Message::RefreshTick);
                }
            }
            Message::RequestTimeout { rid } => {
                if let Some(entry) = self.open_requests.remove(&rid) {
                    let record = DecisionRecord {
                        at: ctx.now(),
                        provider: entry.provider,
                        requestor: self.identity.id(),
                        slot: entry.slot,
                        verdict: Verdict::TimedOut,
                        basis: Basis::None,
                        as_of_height: self.synced_height.unwrap_or(0),
                        waited_ms: self.cfg.request_timeout_ms,
                        flow: entry.flow,
                        contract: "-".to_string(),
                        reason: "no-response".to_string(),
                    };
                    self.log_decision(record, ctx);
                    self.outcomes.push((rid, Verdict::TimedOut, Basis::None));
                }
            }
            _ => {}
        }
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}
