use std::collections::BTreeMap;

use crate::sim::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LivenessEvent {
    Raise,
    Clear,
}

#[derive(Debug, Clone, Default)]
struct Entry {
    awaiting: bool,
    misses: u32,
    exempt: bool,
    alarmed: bool,
}

/// Counts consecutive unanswered polls per SFU. A poll is judged missed
/// when the next poll is due and it has not been answered.
#[derive(Debug, Clone)]
pub struct LivenessMonitor {
    k_miss: u32,
    nodes: BTreeMap<NodeId, Entry>,
}

impl LivenessMonitor {
    pub fn new(k_miss: u32, sfus: impl IntoIterator<Item = NodeId>) -> Self {
        assert!(k_miss >= 1, "k_miss must be at least 1");
        LivenessMonitor { k_miss, nodes: sfus.into_iter().map(|s| (s, Entry::default())).collect() }
    }

    /// Poll is due. Returns whether to send one and any alarm change.
    pub fn poll_due(&mut self, sfu: NodeId) -> (bool, Option<LivenessEvent>) {
        let k = self.k_miss;
        let e = self.nodes.entry(sfu).or_default();
        if e.exempt {
            e.awaiting = false;
            e.misses = 0;
            return (false, None);
        }
        let mut ev = None;
        if e.awaiting {
            e.misses += 1;
            if e.misses >= k && !e.alarmed {
                e.alarmed = true;
                ev = Some(LivenessEvent::Raise);
            }
        }
        e.awaiting = true;
        (true, ev)
    }

    pub fn response(&mut self, sfu: NodeId) -> Option<LivenessEvent> {
        let e = self.nodes.entry(sfu).or_default();
        e.awaiting = false;
        e.misses = 0;
        if e.alarmed {
            e.alarmed = false;
            return Some(LivenessEvent::Clear);
        }
        None
    }

    /// Announced sleep or a known link fault suspends judgement.
    pub fn set_exempt(&mut self, sfu: NodeId, exempt: bool) {
        let e = self.nodes.entry(sfu).or_default();
        e.exempt = exempt;
        if exempt {
            e.awaiting = false;
            e.misses = 0;
        }
    }

    pub fn is_alarmed(&self, sfu: NodeId) -> bool {
        self.nodes.get(&sfu).is_some_and(|e| e.alarmed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kill_at_five_alarms_at_seven() {
        // Polls every second from t=0; the SFU answers polls 0..=4 only.
        let mut m = LivenessMonitor::new(2, [NodeId(1)]);
        let mut raised_at = None;
        for t in 0..10 {
            let (send, ev) = m.poll_due(NodeId(1));
            assert!(send);
            if ev == Some(LivenessEvent::Raise) {
                raised_at = Some(t);
            }
            if t < 5 {
                assert_eq!(m.response(NodeId(1)), None);
            }
        }
        assert_eq!(raised_at, Some(7));
        assert_eq!(m.response(NodeId(1)), Some(LivenessEvent::Clear));
    }

    #[test]
    fn exempt_nodes_never_alarm() {
        let mut m = LivenessMonitor::new(1, [NodeId(1)]);
        m.set_exempt(NodeId(1), true);
        for _ in 0..5 {
            assert_eq!(m.poll_due(NodeId(1)), (false, None));
        }
    }
}
