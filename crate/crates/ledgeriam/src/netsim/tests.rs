use std::any::Any;
use std::collections::BTreeSet;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq)]
enum TestMsg {
    Ping(u32),
    Pong(u32),
    Kick,
}

impl SimMessage for TestMsg {
    fn label(&self) -> String {
        match self {
            TestMsg::Ping(n) => format!("ping{n}"),
            TestMsg::Pong(n) => format!("pong{n}"),
            TestMsg::Kick => "kick".to_string(),
        }
    }
}

/// Replies to pings, optionally pings a peer on start, and logs arrivals.
struct Echo {
    peer: Option<NodeId>,
    pings_on_start: u32,
    received: Vec<(SimTime, TestMsg)>,
}

impl Echo {
    fn new() -> Echo {
        Echo {
            peer: None,
            pings_on_start: 0,
            received: Vec::new(),
        }
    }

    fn pinger(peer: NodeId, pings: u32) -> Echo {
        Echo {
            peer: Some(peer),
            pings_on_start: pings,
            received: Vec::new(),
        }
    }
}

impl Actor<TestMsg> for Echo {
    fn on_start(&mut self, ctx: &mut Ctx<'_, TestMsg>) {
        if let Some(peer) = self.peer {
            for n in 0..self.pings_on_start {
                ctx.send(peer, TestMsg::Ping(n));
            }
        }
    }

    fn on_message(&mut self, from: NodeId, msg: TestMsg, ctx: &mut Ctx<'_, TestMsg>) {
        self.received.push((ctx.now(), msg.clone()));
        if let TestMsg::Ping(n) = msg {
            ctx.send(from, TestMsg::Pong(n));
        }
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}

fn two_nodes(seed: u64, latency: LatencyModel) -> (Sim<TestMsg>, NodeId, NodeId) {
    let mut sim = Sim::new(seed);
    let b = NodeId(1);
    let a = sim.add_node("a", Box::new(Echo::pinger(b, 3)));
    let b = sim.add_node("b", Box::new(Echo::new()));
    sim.set_link(
        a,
        b,
        LinkModel {
            latency,
            up: true,
            channel_cap: 5,
        },
    );
    (sim, a, b)
}

#[test]
fn constant_latency_is_exact() {
    let (mut sim, _, _) = two_nodes(1, LatencyModel::Constant { ms: 40 });
    sim.run_until(SimTime::from_millis(1_000));
    let deliveries: Vec<_> = sim.records().iter().filter(|r| r.kind == "deliver").collect();
    assert_eq!(deliveries.len(), 6, "3 pings + 3 pongs");
    for d in deliveries {
        assert_eq!(d.at - d.sent_at.unwrap(), 40, "delivery = send + L exactly");
    }
}

#[test]
fn identical_seeds_yield_identical_trace_digests() {
    for latency in [
        LatencyModel::Uniform { lo_ms: 5, hi_ms: 50 },
        LatencyModel::Exponential { mean_ms: 20.0 },
    ] {
        let (mut s1, _, _) = two_nodes(99, latency);
        let (mut s2, _, _) = two_nodes(99, latency);
        s1.run_until(SimTime::from_millis(10_000));
        s2.run_until(SimTime::from_millis(10_000));
        assert_eq!(s1.trace_digest(), s2.trace_digest());

        let (mut s3, _, _) = two_nodes(100, latency);
        s3.run_until(SimTime::from_millis(10_000));
        assert_ne!(s1.trace_digest(), s3.trace_digest(), "different seed, different trace");
    }
}

#[test]
fn run_until_executes_events_in_time_order_and_counts_them() {
    let (mut sim, _, _) = two_nodes(7, LatencyModel::Constant { ms: 10 });
    let executed = sim.run_until(SimTime::from_millis(5));
    assert_eq!(executed, 0, "the three deliveries land at t=10");
    assert_eq!(sim.now(), SimTime::from_millis(5));
    let executed = sim.run_until(SimTime::from_millis(100));
    assert_eq!(executed, 6, "three pings and three pongs");
    let times: Vec<u64> = sim.records().iter().map(|r| r.at.millis()).collect();
    let mut sorted = times.clone();
    sorted.sort();
    assert_eq!(times, sorted, "trace is in nondecreasing time order");
}

/// Opens `n` channels to a peer at start, sends one message over each.
struct Opener {
    peer: NodeId,
    n: u32,
    service_ms: u64,
    opened: u32,
}

impl Actor<TestMsg> for Opener {
    fn on_start(&mut self, ctx: &mut Ctx<'_, TestMsg>) {
        for _ in 0..self.n {
            ctx.open_channel(self.peer);
        }
    }

    fn on_message(&mut self, _from: NodeId, _msg: TestMsg, _ctx: &mut Ctx<'_, TestMsg>) {}

    fn on_channel_open(&mut self, channel: ChannelId, _peer: NodeId, ctx: &mut Ctx<'_, TestMsg>) {
        self.opened += 1;
        ctx.channel_send(channel, TestMsg::Ping(self.opened), self.service_ms);
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}

fn channel_sim(cap: u32, opens: u32) -> (Sim<TestMsg>, NodeId) {
    let mut sim = Sim::new(3);
    let sender = sim.add_node(
        "sender",
        Box::new(Opener {
            peer: NodeId(1),
            n: opens,
            service_ms: 100,
            opened: 0,
        }),
    );
    let receiver = sim.add_node("receiver", Box::new(Echo::new()));
    sim.set_link(
        sender,
        receiver,
        LinkModel {
            latency: LatencyModel::Constant { ms: 1 },
            up: true,
            channel_cap: cap,
        },
    );
    (sim, sender)
}

#[test]
fn six_opens_against_cap_five_queue_one() {
    let (mut sim, _) = channel_sim(5, 6);
    sim.run_until(SimTime::from_millis(0));
    let opened = sim.records().iter().filter(|r| r.kind == "chan-opened").count();
    let queued = sim.records().iter().filter(|r| r.kind == "chan-queued").count();
    assert_eq!((opened, queued), (5, 1));
    // After one service time a slot frees and the sixth opens.
    sim.run_until(SimTime::from_millis(100));
    let opened = sim.records().iter().filter(|r| r.kind == "chan-opened").count();
    assert_eq!(opened, 6);
}

#[test]
fn fifty_opens_against_cap_fifty_all_open() {
    let (mut sim, _) = channel_sim(50, 50);
    sim.run_until(SimTime::from_millis(0));
    let opened = sim.records().iter().filter(|r| r.kind == "chan-opened").count();
    let queued = sim.records().iter().filter(|r| r.kind == "chan-queued").count();
    assert_eq!((opened, queued), (50, 0));
}

#[test]
fn sequential_open_close_open_succeeds_under_cap_one() {
    let (mut sim, _) = channel_sim(1, 2);
    sim.run_until(SimTime::from_millis(1_000));
    let opened = sim.records().iter().filter(|r| r.kind == "chan-opened").count();
    assert_eq!(opened, 2, "slot reuse after close");
    // Cap conservation over the whole run.
    let mut active = 0i64;
    for r in sim.records() {
        match r.kind {
            "chan-opened" => {
                active += 1;
                assert!(active <= 1, "cap exceeded at t={}", r.at);
            }
            "chan-close" => active -= 1,
            _ => {}
        }
    }
}

fn cut_between(a: NodeId, b: NodeId, start_ms: u64, end_ms: u64) -> Cut {
    Cut {
        a: BTreeSet::from([a]),
        b: BTreeSet::from([b]),
        start: SimTime::from_millis(start_ms),
        end: SimTime::from_millis(end_ms),
    }
}

/// Sends one ping to a peer every 100 ms, forever.
struct PeriodicSender {
    peer: NodeId,
    sent: u32,
}

impl Actor<TestMsg> for PeriodicSender {
    fn on_start(&mut self, ctx: &mut Ctx<'_, TestMsg>) {
        ctx.schedule_self(100, TestMsg::Kick);
    }

    fn on_message(&mut self, _from: NodeId, _msg: TestMsg, _ctx: &mut Ctx<'_, TestMsg>) {}

    fn on_timer(&mut self, _msg: TestMsg, ctx: &mut Ctx<'_, TestMsg>) {
        self.sent += 1;
        ctx.send(self.peer, TestMsg::Ping(self.sent));
        ctx.schedule_self(100, TestMsg::Kick);
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}

#[test]
fn no_delivery_crosses_an_active_cut_and_queued_messages_heal() {
    let mut sim: Sim<TestMsg> = Sim::new(11);
    let a = sim.add_node("a", Box::new(PeriodicSender { peer: NodeId(1), sent: 0 }));
    let b = sim.add_node("b", Box::new(Echo::new()));
    sim.set_link(a, b, LinkModel::constant(10, 5));
    sim.set_partitions(PartitionSchedule {
        cuts: vec![cut_between(a, b, 250, 650)],
    })
    .unwrap();
    sim.run_until(SimTime::from_millis(1_000));

    for r in sim.records().iter().filter(|r| r.kind == "deliver") {
        let crossing = r.at.millis() > 250 && r.at.millis() <= 650;
        assert!(!crossing, "delivery crossed active cut at t={}", r.at);
    }
    // Sends at 300..600 were queued and delivered after the heal.
    let queued = sim.records().iter().filter(|r| r.kind == "queued").count();
    assert_eq!(queued, 4, "sends at 300,400,500,600 queue");
    let healed: Vec<_> = sim
        .records()
        .iter()
        .filter(|r| r.kind == "deliver" && r.at.millis() == 660)
        .collect();
    assert_eq!(healed.len(), 4, "queued messages flow at heal + latency");
    // Pings from before and after the cut all arrive exactly once.
    let b_actor = sim.actor_mut::<Echo>(b);
    let pings: Vec<u32> = b_actor
        .received
        .iter()
        .filter_map(|(_, m)| match m {
            TestMsg::Ping(n) => Some(*n),
            _ => None,
        })
        .collect();
    let expected: Vec<u32> = (1..=9).collect();
    let mut sorted = pings.clone();
    sorted.sort();
    assert_eq!(sorted, expected, "no loss, no duplication");
}

#[test]
fn in_flight_message_crossing_cut_start_is_dropped() {
    let mut sim: Sim<TestMsg> = Sim::new(13);
    let a = sim.add_node("a", Box::new(PeriodicSender { peer: NodeId(1), sent: 0 }));
    let b = sim.add_node("b", Box::new(Echo::new()));
    // 50 ms latency; the ping sent at t=100 is in flight when the cut lands
    // at t=120.
    sim.set_link(a, b, LinkModel::constant(50, 5));
    sim.set_partitions(PartitionSchedule {
        cuts: vec![cut_between(a, b, 120, 10_000)],
    })
    .unwrap();
    sim.run_until(SimTime::from_millis(500));
    let dropped = sim
        .records()
        .iter()
        .filter(|r| r.kind == "dropped-in-flight")
        .count();
    assert_eq!(dropped, 1);
    let delivered = sim.records().iter().filter(|r| r.kind == "deliver").count();
    assert_eq!(delivered, 0);
}

/// Publishes once to the "blocks" topic at t=100.
struct TimedPublisher;

impl Actor<TestMsg> for TimedPublisher {
    fn on_start(&mut self, ctx: &mut Ctx<'_, TestMsg>) {
        ctx.schedule_self(100, TestMsg::Kick);
    }
    fn on_message(&mut self, _f: NodeId, _m: TestMsg, _c: &mut Ctx<'_, TestMsg>) {}
    fn on_timer(&mut self, _m: TestMsg, ctx: &mut Ctx<'_, TestMsg>) {
        ctx.publish("blocks", TestMsg::Ping(0));
    }
    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}

fn pubsub_sim(queue_on_partition: bool) -> Sim<TestMsg> {
    let mut sim: Sim<TestMsg> = Sim::new(5);
    let p = sim.add_node("p", Box::new(TimedPublisher));
    let s1 = sim.add_node("s1", Box::new(Echo::new()));
    let s2 = sim.add_node("s2", Box::new(Echo::new()));
    sim.set_link(p, s1, LinkModel::constant(5, 5));
    sim.set_link(p, s2, LinkModel::constant(5, 5));
    sim.add_topic("blocks", queue_on_partition);
    sim.subscribe("blocks", s1);
    sim.subscribe("blocks", s2);
    sim.set_partitions(PartitionSchedule {
        cuts: vec![cut_between(p, s2, 50, 200)],
    })
    .unwrap();
    sim
}

#[test]
fn publish_reaches_reachable_subscribers_only() {
    let mut sim = pubsub_sim(false);
    sim.run_until(SimTime::from_millis(300));
    let delivered_to: Vec<&str> = sim
        .records()
        .iter()
        .filter(|r| r.kind == "deliver" && r.label == "ping0")
        .map(|r| r.to.as_str())
        .collect();
    assert_eq!(delivered_to, vec!["s1"], "partitioned subscriber dropped");
    assert_eq!(sim.records().iter().filter(|r| r.kind == "dropped").count(), 1);
}

#[test]
fn queueing_topic_delivers_to_partitioned_subscriber_on_heal() {
    let mut sim = pubsub_sim(true);
    sim.run_until(SimTime::from_millis(300));
    let delivered_to: Vec<(&str, u64)> = sim
        .records()
        .iter()
        .filter(|r| r.kind == "deliver" && r.label == "ping0")
        .map(|r| (r.to.as_str(), r.at.millis()))
        .collect();
    assert_eq!(delivered_to, vec![("s1", 105), ("s2", 205)]);
}

#[test]
fn schedule_conflicts_are_rejected_at_load() {
    let a = NodeId(0);
    let b = NodeId(1);
    // Node on both sides.
    let bad = PartitionSchedule {
        cuts: vec![Cut {
            a: BTreeSet::from([a, b]),
            b: BTreeSet::from([b]),
            start: SimTime::from_millis(0),
            end: SimTime::from_millis(10),
        }],
    };
    assert!(bad.validate().is_err());
    // Overlapping windows for the same pair.
    let overlapping = PartitionSchedule {
        cuts: vec![cut_between(a, b, 0, 100), cut_between(a, b, 50, 150)],
    };
    assert!(overlapping.validate().is_err());
    // Disjoint windows are fine.
    let ok = PartitionSchedule {
        cuts: vec![cut_between(a, b, 0, 100), cut_between(a, b, 100, 150)],
    };
    assert!(ok.validate().is_ok());
    // Empty window is rejected.
    let empty = PartitionSchedule {
        cuts: vec![cut_between(a, b, 100, 100)],
    };
    assert!(empty.validate().is_err());
}

#[test]
fn statically_down_links_drop_rather_than_queue() {
    let mut sim: Sim<TestMsg> = Sim::new(17);
    let a = sim.add_node("a", Box::new(Echo::pinger(NodeId(1), 1)));
    let b = sim.add_node("b", Box::new(Echo::new()));
    sim.set_link(
        a,
        b,
        LinkModel {
            latency: LatencyModel::Constant { ms: 1 },
            up: false,
            channel_cap: 1,
        },
    );
    sim.run_until(SimTime::from_millis(100));
    assert_eq!(sim.records().iter().filter(|r| r.kind == "deliver").count(), 0);
    assert_eq!(sim.records().iter().filter(|r| r.kind == "link-down").count(), 1);
}
