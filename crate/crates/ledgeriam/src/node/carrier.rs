//! The carrier node: syncs full blocks from the ledger and dispatches them
//! to nodes with no ledger route of their own. Receivers validate every
//! block's proof-of-work and Merkle commitment, so a carrier cannot slip a
//! forged block past them.

use std::any::Any;

use crate::contracts::identity::Identity;
use crate::ledger::{Chain, LedgerParams};
use crate::netsim::{Actor, Ctx, NodeId};
use crate::node::messages::{Message, NodeAction, ScriptStep};

/// Scenario knob: corrupt the block at `height` when dispatching, leaving
/// its carried digest stale so receivers reject it and its descendants.
#[derive(Debug, Clone, Copy)]
pub struct ForgedDispatch {
    pub height: u64,
}

pub struct CarrierNode {
    identity: Identity,
    chain: Chain,
    ledger_peer: Option<NodeId>,
    script: Vec<ScriptStep>,
    forge: Option<ForgedDispatch>,
    next_req: u64,
    /// (target node, accepted, rejected) per acknowledged dispatch.
    acks: Vec<(NodeId, u32, u32)>,
}

impl CarrierNode {
    pub fn new(
        identity: Identity,
        params: LedgerParams,
        ledger_peer: Option<NodeId>,
        script: Vec<ScriptStep>,
    ) -> CarrierNode {
        CarrierNode {
            identity,
            // A locally built genesis matches the network's: mining is
            // deterministic from the params.
            chain: Chain::new(params),
            ledger_peer,
            script,
            forge: None,
            next_req: 0,
            acks: Vec::new(),
        }
    }

    pub fn with_forge(mut self, forge: ForgedDispatch) -> CarrierNode {
        self.forge = Some(forge);
        self
    }

    pub fn identity(&self) -> &Identity {
        &self.identity
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn acks(&self) -> &[(NodeId, u32, u32)] {
        &self.acks
    }
}

impl Actor<Message> for CarrierNode {
    fn on_start(&mut self, ctx: &mut Ctx<'_, Message>) {
        let script = self.script.clone();
        for (step, s) in script.iter().enumerate() {
            ctx.schedule_self(s.at.millis(), Message::ScriptStep { step });
        }
    }

    fn on_message(&mut self, from: NodeId, msg: Message, ctx: &mut Ctx<'_, Message>) {
        match msg {
            Message::Blocks { blocks, .. } => {
                for block in blocks {
                    if block.header.height == self.chain.height() + 1 {
                        if self.chain.try_append(block).is_err() {
                            break;
                        }
                    }
                }
                ctx.note(format!("carrier-sync tip={}", self.chain.height()));
            }
            Message::DispatchAck {
                accepted, rejected, ..
            } => {
                self.acks.push((from, accepted, rejected));
                ctx.note(format!(
                    "dispatch-ack target={} accepted={} rejected={}",
                    ctx.node_name(from),
                    accepted,
                    rejected
                ));
            }
            _ => {}
        }
    }

    fn on_timer(&mut self, msg: Message, ctx: &mut Ctx<'_, Message>) {
        let Message::ScriptStep { step } = msg else {
            return;
        };
        match self.script[step].action.clone() {
            NodeAction::SyncNow => {
                if let Some(peer) = self.ledger_peer {
                    self.next_req += 1;
                    ctx.send(
                        peer,
                        Message::GetBlocks {
                            req: self.next_req,
                            from_height: self.chain.height() + 1,
                        },
                    );
                }
            }
            NodeAction::DispatchTo { target } => {
                let mut blocks = self.chain.blocks().to_vec();
                if let Some(forge) = self.forge {
                    if let Some(block) = blocks.get_mut(forge.height as usize) {
                        // Stale digest: the header no longer recomputes.
                        block.header.nonce = block.header.nonce.wrapping_add(1);
                    }
                }
                self.next_req += 1;
                ctx.send(
                    target,
                    Message::Dispatch {
                        req: self.next_req,
                        blocks,
                    },
                );
            }
            _ => {}
        }
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}
