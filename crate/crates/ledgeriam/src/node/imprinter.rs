//! The imprinter: collects announced identities, builds imprinting
//! contracts binding each device to the administrator key, and forwards
//! them to the ledger.

use std::any::Any;
use std::collections::BTreeMap;

use ed25519_dalek::VerifyingKey;

use crate::contracts::identity::{DeviceId, Identity};
use crate::contracts::ops::imprint_unchecked;
use crate::netsim::{Actor, Ctx, NodeId};
use crate::node::messages::Message;
use crate::time::SimTime;

pub struct ImprinterNode {
    identity: Identity,
    admin_pubkey: VerifyingKey,
    ledger_peer: NodeId,
    /// Devices already announced here; re-announcements are dropped.
    announced: BTreeMap<DeviceId, SimTime>,
}

impl ImprinterNode {
    /// An imprinter signing with `identity` and binding devices to
    /// `admin_pubkey` (often its own key).
    pub fn new(identity: Identity, admin_pubkey: VerifyingKey, ledger_peer: NodeId) -> ImprinterNode {
        ImprinterNode {
            identity,
            admin_pubkey,
            ledger_peer,
            announced: BTreeMap::new(),
        }
    }

    pub fn announced_count(&self) -> usize {
        self.announced.len()
    }
}

impl Actor<Message> for ImprinterNode {
    fn on_message(&mut self, _from: NodeId, msg: Message, ctx: &mut Ctx<'_, Message>) {
        match msg {
            Message::Announce {
                device_pubkey,
                generated_at,
            } => {
                let device_id = DeviceId::from_pubkey(&device_pubkey);
                let now = ctx.now();
                if self.announced.contains_key(&device_id) {
                    ctx.note(format!("announce duplicate device={device_id}"));
                    return;
                }
                self.announced.insert(device_id, now);
                ctx.note(format!(
                    "announce device={} gen_at={} recv_at={}",
                    device_id,
                    generated_at.millis(),
                    now.millis()
                ));
                let tx = imprint_unchecked(&device_pubkey, &self.admin_pubkey, &self.identity);
                ctx.send(self.ledger_peer, Message::SubmitTx { tx });
            }
            Message::SubmitAck {
                digest,
                accepted,
                reason,
            } => {
                if !accepted {
                    ctx.note(format!("imprint-nack digest={digest} reason={reason}"));
                }
            }
            _ => {}
        }
    }

    fn as_any(&mut self) -> &mut dyn Any {
        self
    }
}
