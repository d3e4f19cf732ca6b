use serde::{Deserialize, Serialize};

use crate::frames::TcontId;
use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuAllocation {
    pub sta: u32,
    pub ru_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkBwRequest {
    pub sfu: NodeId,
    pub bytes_expected: u64,
    pub tcont: TcontId,
    /// When set, the data is ready for forwarding at exactly this time and
    /// the slot should begin there.
    pub ready_at: Option<SimTime>,
}

/// Optical bandwidth request for one trigger-based uplink round: the sum of
/// the RU payloads plus `per_sta_overhead` bytes per station.
pub fn coordinate_ofdma_uplink(sfu: NodeId, rus: &[RuAllocation], per_sta_overhead: u64) -> Option<UplinkBwRequest> {
    let bytes: u64 = rus.iter().map(|r| r.ru_bytes + per_sta_overhead).sum();
    (bytes > 0).then_some(UplinkBwRequest { sfu, bytes_expected: bytes, tcont: TcontId::data(sfu), ready_at: None })
}

/// Time data spends queued at the SFU between becoming ready and the start
/// of its upstream slot.
pub fn forwarding_delay(ready: SimTime, slot_start: SimTime) -> u64 {
    slot_start.saturating_sub(ready)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_sums_rus() {
        let rus: Vec<_> = (0..4).map(|sta| RuAllocation { sta, ru_bytes: 250 }).collect();
        assert_eq!(coordinate_ofdma_uplink(NodeId(1), &rus, 0).unwrap().bytes_expected, 1000);
        assert_eq!(coordinate_ofdma_uplink(NodeId(1), &rus, 30).unwrap().bytes_expected, 1120);
        assert!(coordinate_ofdma_uplink(NodeId(1), &[], 30).is_none());
    }

    #[test]
    fn late_slot_is_queueing_delay() {
        assert_eq!(forwarding_delay(SimTime(100_000), SimTime(120_000)), 20_000);
        assert_eq!(forwarding_delay(SimTime(100_000), SimTime(100_000)), 0);
    }
}
