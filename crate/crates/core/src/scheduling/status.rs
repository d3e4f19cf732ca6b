use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frames::NUM_DATA_TAGS;
use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaBacklog {
    pub sta: u32,
    pub bytes: u64,
    pub frames: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfuStatusReport {
    pub sfu: NodeId,
    /// Downlink bytes buffered per classification tag.
    pub queued_bytes: [u64; NUM_DATA_TAGS as usize],
    pub queued_frames: u64,
    /// Highest priority (0-7) present in the buffer.
    pub top_priority: Option<u8>,
    pub active_users: u32,
    /// Uplink frames waiting at each associated station, counting at most
    /// one OFDMA round's worth per station.
    pub uplink_backlog: Vec<StaBacklog>,
    pub timestamp: SimTime,
}

impl SfuStatusReport {
    pub fn empty(sfu: NodeId, timestamp: SimTime) -> Self {
        SfuStatusReport {
            sfu,
            queued_bytes: [0; NUM_DATA_TAGS as usize],
            queued_frames: 0,
            top_priority: None,
            active_users: 0,
            uplink_backlog: Vec::new(),
            timestamp,
        }
    }

    pub fn total_bytes(&self) -> u64 {
        self.queued_bytes.iter().sum()
    }

    pub fn uplink_bytes(&self) -> u64 {
        self.uplink_backlog.iter().map(|b| b.bytes).sum()
    }
}

/// Latest report per SFU as seen by the MFU.
#[derive(Debug, Clone)]
pub struct StatusBoard {
    cycle_ns: u64,
    latest: BTreeMap<NodeId, SfuStatusReport>,
    received: u64,
}

impl StatusBoard {
    pub fn new(cycle_ns: u64) -> Self {
        StatusBoard { cycle_ns, latest: BTreeMap::new(), received: 0 }
    }

    pub fn receive(&mut self, report: SfuStatusReport) {
        self.received += 1;
        self.latest.insert(report.sfu, report);
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    pub fn latest(&self, sfu: NodeId) -> Option<&SfuStatusReport> {
        self.latest.get(&sfu)
    }

    /// Reports no older than two cycles.
    pub fn fresh(&self, now: SimTime) -> impl Iterator<Item = &SfuStatusReport> {
        let limit = 2 * self.cycle_ns;
        self.latest.values().filter(move |r| now.saturating_sub(r.timestamp) <= limit)
    }

    /// SFUs among `expected` whose last report is more than two cycles old,
    /// or which never reported.
    pub fn stale(&self, now: SimTime, expected: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
        let limit = 2 * self.cycle_ns;
        expected
            .into_iter()
            .filter(|s| self.latest.get(s).is_none_or(|r| now.saturating_sub(r.timestamp) > limit))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staleness_after_two_cycles() {
        let mut b = StatusBoard::new(1_000_000);
        b.receive(SfuStatusReport::empty(NodeId(1), SimTime::from_millis(1)));
        assert!(b.stale(SimTime::from_millis(3), [NodeId(1)]).is_empty());
        assert_eq!(b.stale(SimTime(3_000_001), [NodeId(1), NodeId(2)]), vec![NodeId(1), NodeId(2)]);
        assert_eq!(b.fresh(SimTime::from_millis(2)).count(), 1);
    }
}
