use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frames::TamapEntry;
use crate::sim::{NodeId, SimTime};

/// Line rate in bits per second. Conversions to time round up to whole
/// nanoseconds; conversions to bytes round down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rate(pub u64);

impl Rate {
    pub fn bps(self) -> u64 {
        self.0
    }

    pub fn tx_time_ns(self, bytes: usize) -> u64 {
        let num = bytes as u128 * 8 * 1_000_000_000;
        num.div_ceil(self.0 as u128) as u64
    }

    pub fn bytes_in(self, ns: u64) -> usize {
        (ns as u128 * self.0 as u128 / 8_000_000_000) as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpticalStats {
    pub down_bytes_sent: u64,
    pub down_frames: u64,
    pub up_bytes_sent: u64,
    pub up_bytes_delivered: u64,
    pub up_bytes_dropped: u64,
    pub slot_violations: u64,
    pub upstream_collisions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownstreamTx {
    pub start: SimTime,
    pub tx_end: SimTime,
    /// Arrival time of the last bit at each attached SFU.
    pub deliveries: Vec<(NodeId, SimTime)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpstreamFault {
    SlotViolation,
    Collision,
}

/// An upstream burst in flight. Resolve it with
/// [`OpticalLink::upstream_complete`] when its last bit arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpstreamBurst {
    pub id: u64,
    pub sfu: NodeId,
    pub start: SimTime,
    pub end: SimTime,
    pub arrival: SimTime,
    pub bytes: usize,
}

#[derive(Debug, Clone)]
struct ActiveBurst {
    burst: UpstreamBurst,
    collided: bool,
}

/// The indoor fiber distribution network: one downstream broadcast
/// transmitter at the MFU and TDMA upstream from the SFUs. Upstream timing
/// assumes ideal ranging, so slot boundaries are compared at the SFU.
#[derive(Debug, Clone)]
pub struct OpticalLink {
    pub downstream: Rate,
    pub upstream: Rate,
    prop: BTreeMap<NodeId, u64>,
    down_free_at: SimTime,
    active: Vec<ActiveBurst>,
    next_burst: u64,
    pub stats: OpticalStats,
}

impl OpticalLink {
    pub fn new(downstream: Rate, upstream: Rate) -> Self {
        assert!(downstream.0 > 0 && upstream.0 > 0, "optical rates must be positive");
        OpticalLink {
            downstream,
            upstream,
            prop: BTreeMap::new(),
            down_free_at: SimTime::ZERO,
            active: Vec::new(),
            next_burst: 0,
            stats: OpticalStats::default(),
        }
    }

    pub fn attach(&mut self, sfu: NodeId, prop_delay_ns: u64) {
        self.prop.insert(sfu, prop_delay_ns);
    }

    pub fn detach(&mut self, sfu: NodeId) {
        self.prop.remove(&sfu);
    }

    pub fn prop_delay(&self, sfu: NodeId) -> u64 {
        self.prop.get(&sfu).copied().unwrap_or(0)
    }

    pub fn max_prop_delay(&self) -> u64 {
        self.prop.values().copied().max().unwrap_or(0)
    }

    pub fn attached(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.prop.keys().copied()
    }

    /// Broadcast `frame_len` bytes downstream. Transmissions are serialized:
    /// a send issued while the transmitter is busy starts when it frees up.
    pub fn downstream_send(&mut self, now: SimTime, frame_len: usize) -> DownstreamTx {
        let start = now.max(self.down_free_at);
        let tx_end = start + self.downstream.tx_time_ns(frame_len);
        self.down_free_at = tx_end;
        self.stats.down_bytes_sent += frame_len as u64;
        self.stats.down_frames += 1;
        let deliveries = self.prop.iter().map(|(&s, &d)| (s, tx_end + d)).collect();
        DownstreamTx { start, tx_end, deliveries }
    }

    /// Start an upstream burst at `now` inside `entry` of the cycle starting
    /// at `cycle_start`.
    pub fn upstream_send(
        &mut self,
        now: SimTime,
        sfu: NodeId,
        frame_len: usize,
        cycle_start: SimTime,
        entry: &TamapEntry,
    ) -> Result<UpstreamBurst, UpstreamFault> {
        self.stats.up_bytes_sent += frame_len as u64;
        let slot_start = cycle_start + entry.offset_ns as u64;
        let slot_end = cycle_start + entry.end_ns();
        let end = now + self.upstream.tx_time_ns(frame_len);
        if entry.sfu != sfu || now < slot_start || end > slot_end {
            self.stats.slot_violations += 1;
            self.stats.up_bytes_dropped += frame_len as u64;
            return Err(UpstreamFault::SlotViolation);
        }
        self.active.retain(|a| a.burst.end > now);
        let mut collided = false;
        for a in self.active.iter_mut() {
            if a.burst.start < end && now < a.burst.end {
                a.collided = true;
                collided = true;
            }
        }
        let burst = UpstreamBurst {
            id: self.next_burst,
            sfu,
            start: now,
            end,
            arrival: end + self.prop_delay(sfu),
            bytes: frame_len,
        };
        self.next_burst += 1;
        self.active.push(ActiveBurst { burst, collided });
        Ok(burst)
    }

    /// Resolve a burst whose last bit has arrived at the MFU.
    pub fn upstream_complete(&mut self, burst: &UpstreamBurst) -> Result<(), UpstreamFault> {
        let collided = self
            .active
            .iter()
            .find(|a| a.burst.id == burst.id)
            .map(|a| a.collided)
            // Pruned entries had no later overlap recorded against them.
            .unwrap_or(false);
        self.active.retain(|a| a.burst.id != burst.id);
        if collided {
            self.stats.upstream_collisions += 1;
            self.stats.up_bytes_dropped += burst.bytes as u64;
            Err(UpstreamFault::Collision)
        } else {
            self.stats.up_bytes_delivered += burst.bytes as u64;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::TcontId;

    fn entry(sfu: u16, offset: u32, dur: u32) -> TamapEntry {
        TamapEntry { sfu: NodeId(sfu), offset_ns: offset, duration_ns: dur, tcont: TcontId::data(NodeId(sfu)) }
    }

    #[test]
    fn downstream_serialization_and_delay() {
        let mut l = OpticalLink::new(Rate(1_000_000_000), Rate(1_000_000_000));
        l.attach(NodeId(1), 50);
        let tx = l.downstream_send(SimTime(1_000), 1250);
        assert_eq!(tx.deliveries, vec![(NodeId(1), SimTime(1_000 + 10_000 + 50))]);
        let tx2 = l.downstream_send(SimTime(1_000), 1250);
        assert_eq!(tx2.start, tx.tx_end);
    }

    #[test]
    fn no_sfus_no_deliveries() {
        let mut l = OpticalLink::new(Rate(1_000_000_000), Rate(1_000_000_000));
        assert!(l.downstream_send(SimTime(0), 100).deliveries.is_empty());
    }

    #[test]
    fn slot_fit_boundary() {
        let mut l = OpticalLink::new(Rate(1_000_000_000), Rate(1_000_000_000));
        l.attach(NodeId(1), 0);
        let b = l.upstream_send(SimTime(0), NodeId(1), 1000, SimTime(0), &entry(1, 0, 8000)).unwrap();
        assert_eq!(b.end, SimTime(8000));
        assert!(l.upstream_complete(&b).is_ok());
        let r = l.upstream_send(SimTime(10_000), NodeId(1), 1000, SimTime(10_000), &entry(1, 0, 7999));
        assert_eq!(r, Err(UpstreamFault::SlotViolation));
        assert_eq!(l.stats.slot_violations, 1);
    }

    #[test]
    fn overlapping_slots_collide() {
        let mut l = OpticalLink::new(Rate(1_000_000_000), Rate(1_000_000_000));
        l.attach(NodeId(1), 0);
        l.attach(NodeId(2), 0);
        let a = l.upstream_send(SimTime(0), NodeId(1), 1000, SimTime(0), &entry(1, 0, 8000)).unwrap();
        let b = l.upstream_send(SimTime(4000), NodeId(2), 1000, SimTime(0), &entry(2, 4000, 8000)).unwrap();
        assert_eq!(l.upstream_complete(&a), Err(UpstreamFault::Collision));
        assert_eq!(l.upstream_complete(&b), Err(UpstreamFault::Collision));
        assert_eq!(l.stats.upstream_collisions, 2);
        assert_eq!(l.stats.up_bytes_delivered + l.stats.up_bytes_dropped, l.stats.up_bytes_sent);
    }

    #[test]
    fn rate_conversions() {
        assert_eq!(Rate(1_000_000_000).tx_time_ns(1250), 10_000);
        assert_eq!(Rate(3).tx_time_ns(1), 2_666_666_667);
        assert_eq!(Rate(1_000_000_000).bytes_in(8000), 1000);
    }
}
