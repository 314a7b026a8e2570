//! The full node: owns the ledger, mines on the simulated clock, and serves
//! header/state/block queries to SPV peers.

use std::any::Any;

use crate::contracts::identity::DeviceId;
use crate::contracts::payload::Payload;
use crate::ledger::{Ledger, LedgerParams, SubmitError};
use crate::netsim::{Actor, Ctx, NodeId};
use crate::node::messages::{Message, ProvenEvent};

pub struct LedgerNode {
    ledger: Ledger,
    mine: bool,
    /// Topic for new-block header announcements, when set.
    announce_topic: Option<String>,
}

impl LedgerNode {
    pub fn new(params: LedgerParams) -> LedgerNode {
        LedgerNode {
            ledger: Ledger::new(params),
            mine: true,
            announce_topic: None,
        }
    }

    pub fn with_announce_topic(mut self, topic: &str) -> LedgerNode {
        self.announce_topic = Some(topic.to_string());
        self
    }

    /// Disables the mining timer (for fixtures driven by hand).
    pub fn without_mining(mut self) -> LedgerNode {
        self.mine = false;
        self
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut Ledger {
        &mut self.ledger
    }

    /// Contract events in blocks `from_height..` relevant to `provider`:
    /// its grants, and revocations aimed at them.
    fn events_for(&self, provider: DeviceId, from_height: u64) -> Vec<ProvenEvent> {
        let mut out = Vec::new();
        for block in self.ledger.chain().blocks().iter().skip(from_height as usize) {
            let height = block.header.height;
            for (index, tx) in block.txs.iter().enumerate() {
                let relevant = match tx.payload() {
                    Payload::Grant(g) => g.provider_id == provider,
                    Payload::Revoke(rev) => self
                        .ledger
                        .state()
                        .grant_event(&rev.target)
                        .map(|ev| match &ev.payload {
                            Payload::Grant(g) => g.provider_id == provider,
                            _ => false,
                        })
                        .unwrap_or(false),
                    _ => false,
                };
                if relevant {
                    let proof = self
                        .ledger
                        .proof_for(height, index)
                        .expect("tx exists in block");
                    out.push(ProvenEvent {
                        height,
                        index: index as u32,
                        tx: tx.clone(),
                        proof,
                    });
                }
            }
        }
        out
    }
}

impl Actor<Message> for LedgerNode {
    fn on_start(&mut self, ctx: &mut Ctx<'_, Message>) {
        if self.mine {
            ctx.schedule_self(self.ledger.params().mining_interval(), Message::MineTick);
        }
    }

    fn on_message(&mut self, from: NodeId, msg: Message, ctx: &mut Ctx<'_, Message>) {
        match msg {
            Message::SubmitTx { tx } => {
                let digest = tx.digest();
                match self.ledger.submit_tx(tx) {
                    Ok(ack) => {
                        ctx.note(format!("submit accepted digest={} queue={}", digest, ack.queue_len));
                        ctx.send(
                            from,
                            Message::SubmitAck {
                                digest,
                                accepted: true,
                                reason: "ok".to_string(),
                            },
                        );
                    }
                    Err(err) => {
                        let non_fatal = matches!(err, SubmitError::Duplicate);
                        ctx.note(format!(
                            "submit rejected digest={digest} duplicate={non_fatal} reason={err}"
                        ));
                        ctx.send(
                            from,
                            Message::SubmitAck {
                                digest,
                                accepted: false,
                                reason: err.to_string(),
                            },
                        );
                    }
                }
            }
            Message::GetState {
                req,
                provider,
                from_height,
            } => {
                let headers = self.ledger.chain().headers_from(from_height);
                let events = self.events_for(provider, from_height);
                ctx.send(from, Message::State { req, headers, events });
            }
            Message::GetBlocks { req, from_height } => {
                let blocks = self
                    .ledger
                    .chain()
                    .blocks()
                    .iter()
                    .skip(from_height as usize)
                    .cloned()
                    .collect();
                ctx.send(from, Message::Blocks { req, blocks });
            }
            _ => {}
        }
    }

    fn on_timer(&mut self, msg: Message, ctx: &mut Ctx<'_, Message>) {
        if let Message::MineTick = msg {
            let now = ctx.now();
            let block = self.ledger.mine_block(now);
            let header = block.header;
            ctx.note(format!(
                "mined height={} txs={} pooled={}",
                header.height,
                block.txs.len(),
                self.ledger.pool().len()
            ));
            if let Some(topic) = self.announce_topic.clone() {
                ctx.publish(&topic, Message::HeaderAnnounce { header });
            }
            ctx.schedule_self(self.ledger.params().mining_interval(), Message::MineTick);
        }
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}
