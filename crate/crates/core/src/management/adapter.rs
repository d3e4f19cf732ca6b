use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use super::mib::{response, result};
use crate::frames::{decode_omci, FrameError, OmciMessage, Routing};
use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("undecodable OMCI message: {0}")]
    Frame(#[from] FrameError),
    #[error("message from the OLT lacks routing bytes")]
    NotExtended,
    #[error("no SFU mapped to port {} id {}", .0.mfu_port_id, .0.sfu_id)]
    UnknownTarget(Routing),
    #[error("{0} is not registered with the adapter")]
    Unregistered(NodeId),
}

/// OMCI adapter at the MFU. All SFUs of the MFU share one port.
#[derive(Debug, Clone)]
pub struct OmciAdapter {
    pub port: u8,
    by_id: BTreeMap<u8, NodeId>,
    by_node: BTreeMap<NodeId, u8>,
    pub unknown_target: u64,
    pub unregistered_drops: u64,
}

impl OmciAdapter {
    pub fn new(port: u8) -> Self {
        OmciAdapter { port, by_id: BTreeMap::new(), by_node: BTreeMap::new(), unknown_target: 0, unregistered_drops: 0 }
    }

    /// Map `sfu_id` to `node`. Replaces any previous mapping of either side.
    pub fn register(&mut self, sfu_id: u8, node: NodeId) {
        if let Some(old) = self.by_node.remove(&node) {
            self.by_id.remove(&old);
        }
        if let Some(old) = self.by_id.insert(sfu_id, node) {
            self.by_node.remove(&old);
        }
        self.by_node.insert(node, sfu_id);
    }

    pub fn routing_for(&self, node: NodeId) -> Option<Routing> {
        self.by_node.get(&node).map(|&sfu_id| Routing { mfu_port_id: self.port, sfu_id })
    }

    /// Decode an extended message from the OLT, resolve its target and strip
    /// the routing bytes.
    pub fn route_downstream(&mut self, wire: &[u8]) -> Result<(NodeId, OmciMessage), AdapterError> {
        let msg = decode_omci(wire)?;
        let routing = msg.routing.ok_or(AdapterError::NotExtended)?;
        let target = (routing.mfu_port_id == self.port).then(|| self.by_id.get(&routing.sfu_id)).flatten();
        match target {
            Some(&node) => Ok((node, msg.to_standard())),
            None => {
                self.unknown_target += 1;
                Err(AdapterError::UnknownTarget(routing))
            }
        }
    }

    /// Extended error response for a request the adapter could not route.
    pub fn error_response(&self, wire: &[u8]) -> Option<OmciMessage> {
        let msg = decode_omci(wire).ok()?;
        let routing = msg.routing?;
        Some(response(msg.header, result::UNKNOWN_TARGET, Vec::new()).with_routing(routing))
    }

    /// Attach the source's routing bytes to a standard message from an SFU.
    pub fn route_upstream(&mut self, from: NodeId, msg: &OmciMessage) -> Result<OmciMessage, AdapterError> {
        match self.routing_for(from) {
            Some(r) => Ok(msg.to_standard().with_routing(r)),
            None => {
                self.unregistered_drops += 1;
                Err(AdapterError::Unregistered(from))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSlot<T> {
    pub sfu: NodeId,
    pub tid: u16,
    pub sent_at: SimTime,
    pub origin: T,
}

/// Flow control for OMCI transactions toward SFUs: at most `limit` in
/// flight, the rest queued in arrival order.
#[derive(Debug, Clone)]
pub struct TransactionWindow<T> {
    limit: usize,
    queue: VecDeque<(NodeId, OmciMessage, T)>,
    outstanding: Vec<WindowSlot<T>>,
}

impl<T> TransactionWindow<T> {
    pub fn new(limit: usize) -> Self {
        TransactionWindow { limit: limit.max(1), queue: VecDeque::new(), outstanding: Vec::new() }
    }

    pub fn enqueue(&mut self, sfu: NodeId, msg: OmciMessage, origin: T) {
        self.queue.push_back((sfu, msg, origin));
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    pub fn in_flight(&self) -> usize {
        self.outstanding.len()
    }

    /// Release the next queued message if the window has room.
    pub fn next_ready(&mut self, now: SimTime) -> Option<(NodeId, OmciMessage)> {
        if self.outstanding.len() >= self.limit {
            return None;
        }
        let (sfu, msg, origin) = self.queue.pop_front()?;
        self.outstanding.push(WindowSlot { sfu, tid: msg.header.transaction_id, sent_at: now, origin });
        Some((sfu, msg))
    }

    /// Match a response. Returns the slot if it was outstanding.
    pub fn complete(&mut self, sfu: NodeId, tid: u16) -> Option<WindowSlot<T>> {
        let i = self.outstanding.iter().position(|s| s.sfu == sfu && s.tid == tid)?;
        Some(self.outstanding.remove(i))
    }

    /// Remove transactions sent at or before `deadline`.
    pub fn expire(&mut self, deadline: SimTime) -> Vec<WindowSlot<T>> {
        let (old, keep): (Vec<_>, Vec<_>) = std::mem::take(&mut self.outstanding).into_iter().partition(|s| s.sent_at <= deadline);
        self.outstanding = keep;
        old
    }

    pub fn outstanding(&self) -> impl Iterator<Item = &WindowSlot<T>> {
        self.outstanding.iter()
    }

    /// The SFU owing the oldest response.
    pub fn oldest_outstanding(&self) -> Option<NodeId> {
        self.oldest_sent().map(|(_, s)| s)
    }

    /// Send time and SFU of the oldest unanswered transaction.
    pub fn oldest_sent(&self) -> Option<(SimTime, NodeId)> {
        self.outstanding.iter().min_by_key(|s| (s.sent_at, s.tid)).map(|s| (s.sent_at, s.sfu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{encode_omci, MsgType, OmciHeader};

    fn msg(sfu_id: u8) -> OmciMessage {
        OmciMessage {
            header: OmciHeader { transaction_id: 77, msg_type: MsgType::Set.request(), device_flags: 0, entity_class: 2, entity_instance: 0 },
            content: vec![1, 2, 3],
            routing: Some(Routing { mfu_port_id: 1, sfu_id }),
        }
    }

    #[test]
    fn downstream_strips_and_upstream_appends() {
        let mut a = OmciAdapter::new(1);
        a.register(3, NodeId(3));
        let m = msg(3);
        let (node, std) = a.route_downstream(&encode_omci(&m).unwrap()).unwrap();
        assert_eq!(node, NodeId(3));
        assert_eq!(std.routing, None);
        assert_eq!(std.content, m.content);
        let up = a.route_upstream(NodeId(3), &std).unwrap();
        assert_eq!(up, m);
    }

    #[test]
    fn unmapped_target_gets_error_response() {
        let mut a = OmciAdapter::new(1);
        a.register(2, NodeId(2));
        let wire = encode_omci(&msg(99)).unwrap();
        assert!(matches!(a.route_downstream(&wire), Err(AdapterError::UnknownTarget(_))));
        let e = a.error_response(&wire).unwrap();
        assert_eq!(e.content, vec![result::UNKNOWN_TARGET]);
        assert_eq!(e.header.transaction_id, 77);
        assert_eq!(e.routing, Some(Routing { mfu_port_id: 1, sfu_id: 99 }));
        assert!(a.route_upstream(NodeId(9), &e).is_err());
    }

    #[test]
    fn window_limits_in_flight() {
        let mut w = TransactionWindow::new(1);
        w.enqueue(NodeId(1), msg(1), ());
        w.enqueue(NodeId(2), msg(2), ());
        assert!(w.next_ready(SimTime(0)).is_some());
        assert!(w.next_ready(SimTime(0)).is_none());
        assert_eq!(w.oldest_outstanding(), Some(NodeId(1)));
        assert!(w.complete(NodeId(1), 77).is_some());
        assert_eq!(w.next_ready(SimTime(5)).unwrap().0, NodeId(2));
        assert_eq!(w.expire(SimTime(5)).len(), 1);
    }
}
