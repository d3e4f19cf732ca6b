use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mib::result;
use crate::frames::{decode_omci, encode_omci, MsgType, OmciHeader, OmciMessage, Routing};
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OltStats {
    pub sent: u64,
    pub delivered: u64,
    pub failed: u64,
    pub undecodable: u64,
    pub unmatched: u64,
}

/// Management endpoint on the access side. Issues extended requests and
/// correlates responses by transaction id.
#[derive(Debug, Clone, Default)]
pub struct Olt {
    next_tid: u16,
    pending: BTreeMap<u16, (SimTime, Routing)>,
    pub stats: OltStats,
    pub round_trip_ns: Vec<u64>,
    pub responses: Vec<OmciMessage>,
}

impl Olt {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build and encode a request. Transaction ids count up from 1 and skip
    /// the upper half, which the MFU uses for its own polls.
    pub fn request(&mut self, now: SimTime, routing: Routing, action: MsgType, class: u16, instance: u16, content: Vec<u8>) -> Vec<u8> {
        self.next_tid = self.next_tid % 0x7FFF + 1;
        let tid = self.next_tid;
        let msg = OmciMessage {
            header: OmciHeader { transaction_id: tid, msg_type: action.request(), device_flags: 0, entity_class: class, entity_instance: instance },
            content,
            routing: Some(routing),
        };
        self.pending.insert(tid, (now, routing));
        self.stats.sent += 1;
        encode_omci(&msg).expect("request fits")
    }

    pub fn receive(&mut self, now: SimTime, wire: &[u8]) {
        let Ok(msg) = decode_omci(wire) else {
            self.stats.undecodable += 1;
            return;
        };
        match self.pending.remove(&msg.header.transaction_id) {
            Some((sent, routing)) if Some(routing) == msg.routing => {
                self.round_trip_ns.push(now - sent);
                if msg.content.first() == Some(&result::OK) {
                    self.stats.delivered += 1;
                } else {
                    self.stats.failed += 1;
                }
                self.responses.push(msg);
            }
            Some(entry) => {
                self.pending.insert(msg.header.transaction_id, entry);
                self.stats.unmatched += 1;
            }
            None => self.stats.unmatched += 1,
        }
    }

    pub fn outstanding(&self) -> usize {
        self.pending.len()
    }
}
