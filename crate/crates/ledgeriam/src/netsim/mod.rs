//! Deterministic discrete-event network simulator.
//!
//! Point-to-point links with pluggable latency models, pub/sub topics,
//! per-sender concurrent-channel caps with FIFO queueing, and scheduled
//! partitions. The event loop is single-threaded and owns all simulation
//! state; events execute in strictly nondecreasing `(time, sequence)` order,
//! and the only randomness is a seeded stream consumed in event order, so
//! identical seeds yield identical traces.
//!
//! Partition semantics: messages in flight across a cut when it starts are
//! dropped (worst-case partition); messages sent into an active cut queue at
//! the sender and are delivered when the cut heals.

use std::any::Any;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::Digest;
use crate::time::SimTime;

mod trace;
pub use trace::TraceRecord;
use trace::Trace;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetsimError {
    #[error("partition schedule conflict: {0}")]
    ScheduleConflict(String),
}

/// Index of a registered node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Identifier of a point-to-point channel reservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId(pub u64);

/// Message payloads must label themselves for the trace.
pub trait SimMessage: Clone {
    fn label(&self) -> String;
}

/// A node's behavior, driven entirely by simulator events.
pub trait Actor<M: SimMessage> {
    fn on_start(&mut self, _ctx: &mut Ctx<'_, M>) {}

    fn on_message(&mut self, from: NodeId, msg: M, ctx: &mut Ctx<'_, M>);

    /// A self-scheduled message fired.
    fn on_timer(&mut self, _msg: M, _ctx: &mut Ctx<'_, M>) {}

    /// A previously requested channel reservation opened.
    fn on_channel_open(&mut self, _channel: ChannelId, _peer: NodeId, _ctx: &mut Ctx<'_, M>) {}

    fn as_any(&mut self) -> &mut dyn Any;
}

/// Latency distribution of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatencyModel {
    Constant { ms: u64 },
    Uniform { lo_ms: u64, hi_ms: u64 },
    Exponential { mean_ms: f64 },
}

impl LatencyModel {
    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        use rand_core::RngCore;
        match *self {
            LatencyModel::Constant { ms } => ms,
            LatencyModel::Uniform { lo_ms, hi_ms } => {
                if hi_ms <= lo_ms {
                    lo_ms
                } else {
                    lo_ms + rng.next_u64() % (hi_ms - lo_ms + 1)
                }
            }
            LatencyModel::Exponential { mean_ms } => {
                // Inverse-CDF sampling from a uniform in (0, 1].
                let u = (rng.next_u64() as f64 + 1.0) / (u64::MAX as f64 + 2.0);
                (-mean_ms * u.ln()).round() as u64
            }
        }
    }
}

/// A directed link between two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub latency: LatencyModel,
    /// Statically down links drop traffic outright (no heal queue).
    pub up: bool,
    /// Concurrent channels the sending endpoint may hold open; further
    /// opens queue FIFO at the sender.
    pub channel_cap: u32,
}

impl LinkModel {
    pub fn constant(ms: u64, channel_cap: u32) -> LinkModel {
        LinkModel {
            latency: LatencyModel::Constant { ms },
            up: true,
            channel_cap,
        }
    }
}

/// One scheduled cut separating node set `a` from node set `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub a: BTreeSet<NodeId>,
    pub b: BTreeSet<NodeId>,
    pub start: SimTime,
    pub end: SimTime,
}

impl Cut {
    pub fn severs(&self, x: NodeId, y: NodeId) -> bool {
        (self.a.contains(&x) && self.b.contains(&y))
            || (self.a.contains(&y) && self.b.contains(&x))
    }

    fn same_pair(&self, other: &Cut) -> bool {
        (self.a == other.a && self.b == other.b) || (self.a == other.b && self.b == other.a)
    }

    fn overlaps(&self, other: &Cut) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// The scheduled cuts of a scenario.
#[derive(Debug, Clone, Default)]
pub struct PartitionSchedule {
    pub cuts: Vec<Cut>,
}

impl PartitionSchedule {
    /// Rejects ill-formed entries at load time: a node on both sides of a
    /// cut, an empty side, a non-positive window, or two entries for the
    /// same pair of sides with overlapping windows.
    pub fn validate(&self) -> Result<(), NetsimError> {
        for (i, cut) in self.cuts.iter().enumerate() {
            if cut.a.is_empty() || cut.b.is_empty() {
                return Err(NetsimError::ScheduleConflict(format!(
                    "cut {i} has an empty side"
                )));
            }
            if cut.a.intersection(&cut.b).next().is_some() {
                return Err(NetsimError::ScheduleConflict(format!(
                    "cut {i} places a node on both sides"
                )));
            }
            if cut.start >= cut.end {
                return Err(NetsimError::ScheduleConflict(format!(
                    "cut {i} has a non-positive window"
                )));
            }
            for (j, other) in self.cuts.iter().enumerate().skip(i + 1) {
                if cut.same_pair(other) && cut.overlaps(other) {
                    return Err(NetsimError::ScheduleConflict(format!(
                        "cuts {i} and {j} overlap for the same node sets"
                    )));
                }
            }
        }
        Ok(())
    }
}

enum Event<M> {
    Deliver {
        from: NodeId,
        to: NodeId,
        msg: M,
        sent_at: SimTime,
    },
    Timer {
        node: NodeId,
        msg: M,
    },
    ChannelOpened {
        id: ChannelId,
    },
    ChannelClosed {
        id: ChannelId,
    },
    CutStart {
        idx: usize,
    },
    CutEnd {
        idx: usize,
    },
}

struct Scheduled<M> {
    at: SimTime,
    seq: u64,
    event: Event<M>,
}

impl<M> PartialEq for Scheduled<M> {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}
impl<M> Eq for Scheduled<M> {}
impl<M> PartialOrd for Scheduled<M> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<M> Ord for Scheduled<M> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

struct Channel {
    sender: NodeId,
    receiver: NodeId,
    open: bool,
}

struct QueuedMessage<M> {
    from: NodeId,
    to: NodeId,
    msg: M,
}

struct Topic {
    subscribers: Vec<NodeId>,
    queue_on_partition: bool,
}

/// Simulator state reachable from actor callbacks.
pub struct SimCore<M: SimMessage> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<Scheduled<M>>>,
    cancelled: BTreeSet<u64>,
    names: Vec<String>,
    links: BTreeMap<(NodeId, NodeId), LinkModel>,
    topics: BTreeMap<String, Topic>,
    cuts: Vec<Cut>,
    active_cuts: BTreeSet<usize>,
    rng: ChaCha8Rng,
    trace: Trace,
    next_channel: u64,
    channels: BTreeMap<ChannelId, Channel>,
    active_per_sender: BTreeMap<NodeId, u32>,
    pending_opens: BTreeMap<NodeId, VecDeque<ChannelId>>,
    heal_messages: Vec<QueuedMessage<M>>,
    heal_opens: Vec<ChannelId>,
}

impl<M: SimMessage> SimCore<M> {
    fn schedule(&mut self, at: SimTime, event: Event<M>) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Scheduled { at, seq, event }));
        seq
    }

    fn name(&self, node: NodeId) -> &str {
        &self.names[node.0]
    }

    fn link(&self, from: NodeId, to: NodeId) -> Option<&LinkModel> {
        self.links.get(&(from, to))
    }

    fn cut_active(&self, a: NodeId, b: NodeId) -> bool {
        self.active_cuts
            .iter()
            .any(|&idx| self.cuts[idx].severs(a, b))
    }

    /// A usable path exists right now: a link is defined, administratively
    /// up, and no active cut severs the pair.
    fn reachable(&self, from: NodeId, to: NodeId) -> bool {
        match self.link(from, to) {
            Some(link) => link.up && !self.cut_active(from, to),
            None => false,
        }
    }

    fn send_from(&mut self, from: NodeId, to: NodeId, msg: M) {
        match self.link(from, to) {
            None => {
                self.record("unroutable", from, to, msg.label(), None);
            }
            Some(link) if !link.up => {
                self.record("link-down", from, to, msg.label(), None);
            }
            Some(link) => {
                if self.cut_active(from, to) {
                    self.record("queued", from, to, msg.label(), None);
                    self.heal_messages.push(QueuedMessage { from, to, msg });
                } else {
                    let latency = link.latency;
                    let delay = latency.sample(&mut self.rng);
                    let sent_at = self.now;
                    self.schedule(
                        self.now + delay,
                        Event::Deliver {
                            from,
                            to,
                            msg,
                            sent_at,
                        },
                    );
                }
            }
        }
    }

    fn record(&mut self, kind: &'static str, from: NodeId, to: NodeId, label: String, sent_at: Option<SimTime>) {
        let from = self.names[from.0].clone();
        let to = self.names[to.0].clone();
        let record = TraceRecord {
            at: self.now,
            seq: self.next_seq,
            kind,
            from,
            to,
            label,
            sent_at,
        };
        self.trace.push(record);
    }

    fn open_channel_from(&mut self, sender: NodeId, receiver: NodeId) -> ChannelId {
        let id = ChannelId(self.next_channel);
        self.next_channel += 1;
        self.channels.insert(
            id,
            Channel {
                sender,
                receiver,
                open: false,
            },
        );
        match self.link(sender, receiver) {
            None => {
                self.record("chan-unroutable", sender, receiver, format!("ch{}", id.0), None);
            }
            Some(link) if !link.up => {
                self.record("chan-unroutable", sender, receiver, format!("ch{}", id.0), None);
            }
            Some(link) => {
                let cap = link.channel_cap;
                if self.cut_active(sender, receiver) {
                    self.record("chan-queued-cut", sender, receiver, format!("ch{}", id.0), None);
                    self.heal_opens.push(id);
                } else {
                    self.try_open(id, cap);
                }
            }
        }
        id
    }

    fn try_open(&mut self, id: ChannelId, cap: u32) {
        let (sender, receiver) = {
            let ch = &self.channels[&id];
            (ch.sender, ch.receiver)
        };
        let active = self.active_per_sender.get(&sender).copied().unwrap_or(0);
        if active < cap {
            self.active_per_sender.insert(sender, active + 1);
            self.record("chan-open", sender, receiver, format!("ch{}", id.0), None);
            self.schedule(self.now, Event::ChannelOpened { id });
        } else {
            self.record("chan-queued", sender, receiver, format!("ch{}", id.0), None);
            self.pending_opens.entry(sender).or_default().push_back(id);
        }
    }

    fn close_channel_now(&mut self, id: ChannelId) {
        self.schedule(self.now, Event::ChannelClosed { id });
    }
}

/// Callback context handed to actors; all side effects flow through it.
pub struct Ctx<'a, M: SimMessage> {
    core: &'a mut SimCore<M>,
    node: NodeId,
}

impl<'a, M: SimMessage> Ctx<'a, M> {
    pub fn now(&self) -> SimTime {
        self.core.now
    }

    pub fn id(&self) -> NodeId {
        self.node
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        self.core.name(node)
    }

    /// Sends a message over the point-to-point link to `to`.
    pub fn send(&mut self, to: NodeId, msg: M) {
        self.core.send_from(self.node, to, msg);
    }

    /// Schedules `msg` back to this node after `delay_ms`. Self-messages
    /// never cross links and cannot be cut.
    pub fn schedule_self(&mut self, delay_ms: u64, msg: M) {
        let node = self.node;
        let at = self.core.now + delay_ms;
        self.core.schedule(at, Event::Timer { node, msg });
    }

    /// Publishes to every subscriber of `topic` currently reachable;
    /// unreachable subscribers receive on heal if the topic queues.
    pub fn publish(&mut self, topic: &str, msg: M) {
        let Some(t) = self.core.topics.get(topic) else {
            return;
        };
        let queue_on_partition = t.queue_on_partition;
        let subscribers: Vec<NodeId> = t
            .subscribers
            .iter()
            .copied()
            .filter(|&s| s != self.node)
            .collect();
        for sub in subscribers {
            if self.core.reachable(self.node, sub) {
                self.core.send_from(self.node, sub, msg.clone());
            } else if queue_on_partition
                && self.core.link(self.node, sub).map(|l| l.up).unwrap_or(false)
            {
                self.core.record("queued", self.node, sub, msg.label(), None);
                self.core.heal_messages.push(QueuedMessage {
                    from: self.node,
                    to: sub,
                    msg: msg.clone(),
                });
            } else {
                self.core.record("dropped", self.node, sub, msg.label(), None);
            }
        }
    }

    /// Requests a channel to `to`; opens immediately if the sender is under
    /// its concurrent-channel cap, otherwise queues FIFO.
    pub fn open_channel(&mut self, to: NodeId) -> ChannelId {
        self.core.open_channel_from(self.node, to)
    }

    /// Transfers `msg` over an open channel, holding the channel for
    /// `service_ms`, then closes it. Delivery lands after service time plus
    /// link latency.
    pub fn channel_send(&mut self, channel: ChannelId, msg: M, service_ms: u64) {
        let (sender, receiver, open) = match self.core.channels.get(&channel) {
            Some(ch) => (ch.sender, ch.receiver, ch.open),
            None => return,
        };
        debug_assert!(open && sender == self.node, "channel must be open and owned");
        let close_at = self.core.now + service_ms;
        self.core.schedule(close_at, Event::ChannelClosed { id: channel });
        let latency = self.core.link(sender, receiver).map(|l| l.latency);
        let delay = match latency {
            Some(latency) => latency.sample(&mut self.core.rng),
            None => 0,
        };
        let sent_at = self.core.now;
        self.core.schedule(
            close_at + delay,
            Event::Deliver {
                from: sender,
                to: receiver,
                msg,
                sent_at,
            },
        );
    }

    /// Releases a channel without sending.
    pub fn close_channel(&mut self, channel: ChannelId) {
        self.core.close_channel_now(channel);
    }

    /// Appends a structured line to the run's note log (hashed into the
    /// trace digest).
    pub fn note(&mut self, line: String) {
        let now = self.core.now;
        let name = self.core.names[self.node.0].clone();
        self.core.trace.note(now, name, line);
    }

    /// True iff a usable path to `to` exists right now.
    pub fn reachable(&self, to: NodeId) -> bool {
        self.core.reachable(self.node, to)
    }
}

/// The simulator: nodes, topology, schedule, clock, and trace.
pub struct Sim<M: SimMessage> {
    core: SimCore<M>,
    actors: Vec<Option<Box<dyn Actor<M>>>>,
    started: bool,
}

impl<M: SimMessage> Sim<M> {
    pub fn new(seed: u64) -> Sim<M> {
        Sim {
            core: SimCore {
                now: SimTime::ZERO,
                next_seq: 0,
                queue: BinaryHeap::new(),
                cancelled: BTreeSet::new(),
                names: Vec::new(),
                links: BTreeMap::new(),
                topics: BTreeMap::new(),
                cuts: Vec::new(),
                active_cuts: BTreeSet::new(),
                rng: ChaCha8Rng::seed_from_u64(seed),
                trace: Trace::new(),
                next_channel: 0,
                channels: BTreeMap::new(),
                active_per_sender: BTreeMap::new(),
                pending_opens: BTreeMap::new(),
                heal_messages: Vec::new(),
                heal_opens: Vec::new(),
            },
            actors: Vec::new(),
            started: false,
        }
    }

    pub fn add_node(&mut self, name: &str, actor: Box<dyn Actor<M>>) -> NodeId {
        let id = NodeId(self.actors.len());
        self.core.names.push(name.to_string());
        self.actors.push(Some(actor));
        id
    }

    /// Installs a symmetric link between `a` and `b`.
    pub fn set_link(&mut self, a: NodeId, b: NodeId, model: LinkModel) {
        self.core.links.insert((a, b), model);
        self.core.links.insert((b, a), model);
    }

    /// Installs a one-directional link.
    pub fn set_link_directed(&mut self, from: NodeId, to: NodeId, model: LinkModel) {
        self.core.links.insert((from, to), model);
    }

    pub fn add_topic(&mut self, name: &str, queue_on_partition: bool) {
        self.core.topics.insert(
            name.to_string(),
            Topic {
                subscribers: Vec::new(),
                queue_on_partition,
            },
        );
    }

    pub fn subscribe(&mut self, topic: &str, node: NodeId) {
        if let Some(t) = self.core.topics.get_mut(topic) {
            if !t.subscribers.contains(&node) {
                t.subscribers.push(node);
            }
        }
    }

    /// Validates and installs the partition schedule, scheduling cut and
    /// heal events.
    pub fn set_partitions(&mut self, schedule: PartitionSchedule) -> Result<(), NetsimError> {
        schedule.validate()?;
        for (idx, cut) in schedule.cuts.iter().enumerate() {
            self.core.schedule(cut.start, Event::CutStart { idx });
            self.core.schedule(cut.end, Event::CutEnd { idx });
        }
        self.core.cuts = schedule.cuts;
        Ok(())
    }

    pub fn now(&self) -> SimTime {
        self.core.now
    }

    pub fn trace_digest(&self) -> Digest {
        self.core.trace.digest()
    }

    pub fn records(&self) -> &[TraceRecord] {
        self.core.trace.records()
    }

    pub fn notes(&self) -> &[String] {
        self.core.trace.notes()
    }

    /// Typed access to a node's actor, for post-run inspection.
    pub fn actor_mut<T: 'static>(&mut self, node: NodeId) -> &mut T {
        self.actors[node.0]
            .as_mut()
            .expect("actor present between events")
            .as_any()
            .downcast_mut::<T>()
            .expect("actor type matches")
    }

    fn start(&mut self) {
        for i in 0..self.actors.len() {
            let mut actor = self.actors[i].take().expect("actor present");
            actor.on_start(&mut Ctx {
                core: &mut self.core,
                node: NodeId(i),
            });
            self.actors[i] = Some(actor);
        }
    }

    /// Executes every event with time ≤ `t_end`, in order. Returns the
    /// number executed.
    pub fn run_until(&mut self, t_end: SimTime) -> u64 {
        if !self.started {
            self.started = true;
            self.start();
        }
        let mut executed = 0u64;
        loop {
            let due = match self.core.queue.peek() {
                Some(Reverse(s)) if s.at <= t_end => true,
                _ => false,
            };
            if !due {
                break;
            }
            let Reverse(scheduled) = self.core.queue.pop().expect("peeked");
            if self.core.cancelled.remove(&scheduled.seq) {
                continue;
            }
            debug_assert!(scheduled.at >= self.core.now, "time must not run backwards");
            self.core.now = scheduled.at;
            executed += 1;
            self.dispatch(scheduled);
        }
        if self.core.now < t_end {
            self.core.now = t_end;
        }
        executed
    }

    fn dispatch(&mut self, scheduled: Scheduled<M>) {
        let seq = scheduled.seq;
        match scheduled.event {
            Event::Deliver {
                from,
                to,
                msg,
                sent_at,
            } => {
                let record = TraceRecord {
                    at: self.core.now,
                    seq,
                    kind: "deliver",
                    from: self.core.name(from).to_string(),
                    to: self.core.name(to).to_string(),
                    label: msg.label(),
                    sent_at: Some(sent_at),
                };
                self.core.trace.push(record);
                self.with_actor(to, |actor, ctx| actor.on_message(from, msg, ctx));
            }
            Event::Timer { node, msg } => {
                let record = TraceRecord {
                    at: self.core.now,
                    seq,
                    kind: "timer",
                    from: self.core.name(node).to_string(),
                    to: self.core.name(node).to_string(),
                    label: msg.label(),
                    sent_at: None,
                };
                self.core.trace.push(record);
                self.with_actor(node, |actor, ctx| actor.on_timer(msg, ctx));
            }
            Event::ChannelOpened { id } => {
                let (sender, receiver) = {
                    let ch = self
                        .core
                        .channels
                        .get_mut(&id)
                        .expect("opened channel exists");
                    ch.open = true;
                    (ch.sender, ch.receiver)
                };
                let record = TraceRecord {
                    at: self.core.now,
                    seq,
                    kind: "chan-opened",
                    from: self.core.name(sender).to_string(),
                    to: self.core.name(receiver).to_string(),
                    label: format!("ch{}", id.0),
                    sent_at: None,
                };
                self.core.trace.push(record);
                self.with_actor(sender, |actor, ctx| actor.on_channel_open(id, receiver, ctx));
            }
            Event::ChannelClosed { id } => {
                let Some(channel) = self.core.channels.remove(&id) else {
                    return;
                };
                let record = TraceRecord {
                    at: self.core.now,
                    seq,
                    kind: "chan-close",
                    from: self.core.name(channel.sender).to_string(),
                    to: self.core.name(channel.receiver).to_string(),
                    label: format!("ch{}", id.0),
                    sent_at: None,
                };
                self.core.trace.push(record);
                if channel.open {
                    if let Some(active) = self.core.active_per_sender.get_mut(&channel.sender) {
                        *active = active.saturating_sub(1);
                    }
                }
                // A freed slot admits the next queued open, FIFO.
                let next = self
                    .core
                    .pending_opens
                    .get_mut(&channel.sender)
                    .and_then(|q| q.pop_front());
                if let Some(next_id) = next {
                    let cap = {
                        let ch = &self.core.channels[&next_id];
                        self.core
                            .link(ch.sender, ch.receiver)
                            .map(|l| l.channel_cap)
                            .unwrap_or(1)
                    };
                    self.core.try_open(next_id, cap);
                }
            }
            Event::CutStart { idx } => {
                self.core.active_cuts.insert(idx);
                let record = TraceRecord {
                    at: self.core.now,
                    seq,
                    kind: "cut-start",
                    from: format!("cut{idx}"),
                    to: String::new(),
                    label: String::new(),
                    sent_at: None,
                };
                self.core.trace.push(record);
                // Drop in-flight deliveries crossing the new cut.
                let mut doomed: Vec<(u64, NodeId, NodeId, String)> = Vec::new();
                for Reverse(pending) in self.core.queue.iter() {
                    if self.core.cancelled.contains(&pending.seq) {
                        continue;
                    }
                    if let Event::Deliver { from, to, msg, .. } = &pending.event {
                        if self.core.cuts[idx].severs(*from, *to) {
                            doomed.push((pending.seq, *from, *to, msg.label()));
                        }
                    }
                }
                doomed.sort_by_key(|d| d.0);
                for (dseq, from, to, label) in doomed {
                    self.core.cancelled.insert(dseq);
                    let record = TraceRecord {
                        at: self.core.now,
                        seq: dseq,
                        kind: "dropped-in-flight",
                        from: self.core.name(from).to_string(),
                        to: self.core.name(to).to_string(),
                        label,
                        sent_at: None,
                    };
                    self.core.trace.push(record);
                }
            }
            Event::CutEnd { idx } => {
                self.core.active_cuts.remove(&idx);
                let record = TraceRecord {
                    at: self.core.now,
                    seq,
                    kind: "cut-end",
                    from: format!("cut{idx}"),
                    to: String::new(),
                    label: String::new(),
                    sent_at: None,
                };
                self.core.trace.push(record);
                // Queued messages whose endpoints are reachable again flow
                // now, in queueing order.
                let pending = std::mem::take(&mut self.core.heal_messages);
                for queued in pending {
                    if self.core.reachable(queued.from, queued.to) {
                        self.core.send_from(queued.from, queued.to, queued.msg);
                    } else {
                        self.core.heal_messages.push(queued);
                    }
                }
                let opens = std::mem::take(&mut self.core.heal_opens);
                for id in opens {
                    let Some(ch) = self.core.channels.get(&id) else {
                        continue;
                    };
                    let (sender, receiver) = (ch.sender, ch.receiver);
                    if self.core.reachable(sender, receiver) {
                        let cap = self
                            .core
                            .link(sender, receiver)
                            .map(|l| l.channel_cap)
                            .unwrap_or(1);
                        self.core.try_open(id, cap);
                    } else {
                        self.core.heal_opens.push(id);
                    }
                }
            }
        }
    }

    fn with_actor<F>(&mut self, node: NodeId, f: F)
    where
        F: FnOnce(&mut Box<dyn Actor<M>>, &mut Ctx<'_, M>),
    {
        let mut actor = self.actors[node.0].take().expect("actor present");
        f(
            &mut actor,
            &mut Ctx {
                core: &mut self.core,
                node,
            },
        );
        self.actors[node.0] = Some(actor);
    }
}

#[cfg(test)]
mod tests;
