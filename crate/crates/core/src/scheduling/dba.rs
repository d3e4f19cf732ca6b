use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::UplinkBwRequest;
use crate::frames::{pma_encoded_len, pma_max_payload, Tamap, TamapEntry, TcontId};
use crate::links::Rate;
use crate::sim::{NodeId, SimTime};

/// How an upstream burst of `n` payload bytes maps to slot time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurstTiming {
    /// Burst header of `overhead_bytes` plus payload, FEC-encoded.
    Framed { overhead_bytes: usize },
    /// Raw byte stream (digitized baseband).
    Raw,
}

impl BurstTiming {
    pub fn wire_bytes(self, payload: u64) -> usize {
        match self {
            BurstTiming::Framed { overhead_bytes } => pma_encoded_len(overhead_bytes + payload as usize),
            BurstTiming::Raw => payload as usize,
        }
    }

    pub fn time_ns(self, rate: Rate, payload: u64) -> u64 {
        if payload == 0 {
            return 0;
        }
        rate.tx_time_ns(self.wire_bytes(payload))
    }

    /// Largest payload whose burst fits in `ns`.
    pub fn payload_fitting(self, rate: Rate, ns: u64) -> u64 {
        let wire = rate.bytes_in(ns);
        match self {
            BurstTiming::Framed { overhead_bytes } => pma_max_payload(wire).saturating_sub(overhead_bytes) as u64,
            BurstTiming::Raw => wire as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbaConfig {
    pub cycle_ns: u64,
    pub guard_ns: u64,
    pub omci_slot_ns: u64,
    pub min_slot_ns: u64,
    pub upstream: Rate,
    pub timing: BurstTiming,
}

impl DbaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.cycle_ns > u32::MAX as u64 {
            return Err("allocation cycle must fit the 32-bit TAMap offset".into());
        }
        if self.omci_slot_ns == 0 || self.omci_slot_ns + 2 * self.guard_ns + self.min_slot_ns > self.cycle_ns {
            return Err(format!(
                "allocation cycle {} ns too short for OMCI slot {} ns, guards and minimum slot",
                self.cycle_ns, self.omci_slot_ns
            ));
        }
        Ok(())
    }
}

/// Upstream bandwidth allocator. Regular demand accumulates per SFU and is
/// drawn down as slots are granted, so any shortfall carries into the next
/// cycle. Anchored requests are placed at their ready time.
#[derive(Debug, Clone)]
pub struct Dba {
    pub cfg: DbaConfig,
    demand: BTreeMap<NodeId, u64>,
    anchored: Vec<UplinkBwRequest>,
}

impl Dba {
    pub fn new(cfg: DbaConfig) -> Self {
        Dba { cfg, demand: BTreeMap::new(), anchored: Vec::new() }
    }

    pub fn request(&mut self, req: UplinkBwRequest) {
        if req.bytes_expected == 0 {
            return;
        }
        if req.ready_at.is_some() {
            self.anchored.push(req);
        } else {
            *self.demand.entry(req.sfu).or_default() += req.bytes_expected;
        }
    }

    pub fn demand(&self, sfu: NodeId) -> u64 {
        self.demand.get(&sfu).copied().unwrap_or(0) + self.anchored.iter().filter(|r| r.sfu == sfu).map(|r| r.bytes_expected).sum::<u64>()
    }

    /// Whether any regular or anchored demand is waiting for a map.
    pub fn has_work(&self) -> bool {
        !self.demand.is_empty() || !self.anchored.is_empty()
    }

    pub fn forget(&mut self, sfu: NodeId) {
        self.demand.remove(&sfu);
        self.anchored.retain(|r| r.sfu != sfu);
    }

    /// Build the map for the cycle starting at `cycle_start`. The OMCI slot
    /// goes to `omci_owner` at offset zero.
    pub fn generate_tamap(&mut self, cycle_start: SimTime, omci_owner: NodeId) -> Tamap {
        let cfg = self.cfg;
        let end = cycle_start + cfg.cycle_ns;
        let (now, later): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.anchored).into_iter().partition(|r| r.ready_at.expect("anchored") < end);
        self.anchored = later;
        let requests: Vec<UplinkBwRequest> = self
            .demand
            .iter()
            .filter(|(_, &b)| b > 0)
            .map(|(&sfu, &b)| UplinkBwRequest { sfu, bytes_expected: b, tcont: TcontId::data(sfu), ready_at: None })
            .collect();
        let (tamap, granted, unplaced) = allocate(&cfg, cycle_start, omci_owner, &now, &requests);
        for (sfu, bytes) in granted {
            if let Some(d) = self.demand.get_mut(&sfu) {
                *d = d.saturating_sub(bytes);
            }
        }
        for r in unplaced {
            *self.demand.entry(r.sfu).or_default() += r.bytes_expected;
        }
        self.demand.retain(|_, b| *b > 0);
        tamap
    }
}

/// Pure slot allocation for one cycle.
///
/// Layout: the OMCI slot at offset 0, then anchored requests in ready order
/// at their ready offsets (or the next free position), then one entry per
/// regular requester. Each regular requester gets up to `min_slot_ns`, and
/// the residual time is shared in proportion to `bytes_expected`, capped at
/// the time the request needs. Every entry is followed by `guard_ns`.
///
/// Returns the map, the regular bytes granted per SFU, and anchored
/// requests that did not fit.
pub fn allocate(
    cfg: &DbaConfig,
    cycle_start: SimTime,
    omci_owner: NodeId,
    anchored: &[UplinkBwRequest],
    requests: &[UplinkBwRequest],
) -> (Tamap, Vec<(NodeId, u64)>, Vec<UplinkBwRequest>) {
    let cycle = cfg.cycle_ns;
    let mut entries = vec![TamapEntry { sfu: omci_owner, offset_ns: 0, duration_ns: cfg.omci_slot_ns as u32, tcont: TcontId::OMCI }];
    let mut cursor = cfg.omci_slot_ns + cfg.guard_ns;
    let mut unplaced = Vec::new();

    let mut anchored: Vec<&UplinkBwRequest> = anchored.iter().collect();
    anchored.sort_by_key(|r| (r.ready_at, r.sfu));
    for r in anchored {
        let want = r.ready_at.expect("anchored").saturating_sub(cycle_start);
        let offset = want.max(cursor);
        let dur = cfg.timing.time_ns(cfg.upstream, r.bytes_expected);
        if offset + dur + cfg.guard_ns > cycle {
            unplaced.push(UplinkBwRequest { ready_at: None, ..*r });
            continue;
        }
        entries.push(TamapEntry { sfu: r.sfu, offset_ns: offset as u32, duration_ns: dur as u32, tcont: r.tcont });
        cursor = offset + dur + cfg.guard_ns;
    }

    let mut granted = Vec::new();
    let n = requests.len() as u64;
    let avail = cycle.saturating_sub(cursor).saturating_sub(n * cfg.guard_ns);
    if n > 0 && avail > 0 {
        let need: Vec<u64> = requests.iter().map(|r| cfg.timing.time_ns(cfg.upstream, r.bytes_expected)).collect();
        let mins: Vec<u64> = need.iter().map(|&t| t.min(cfg.min_slot_ns)).collect();
        let min_total: u64 = mins.iter().sum();
        let (mins, residual) = if min_total <= avail {
            (mins, avail - min_total)
        } else {
            // Not even the minimums fit: share everything proportionally.
            (vec![0; requests.len()], avail)
        };
        let total_bytes: u128 = requests.iter().map(|r| r.bytes_expected as u128).sum();
        for (i, r) in requests.iter().enumerate() {
            let prop = (residual as u128 * r.bytes_expected as u128 / total_bytes) as u64;
            let dur = mins[i] + prop.min(need[i]);
            if dur == 0 {
                continue;
            }
            entries.push(TamapEntry { sfu: r.sfu, offset_ns: cursor as u32, duration_ns: dur as u32, tcont: r.tcont });
            cursor += dur + cfg.guard_ns;
            let fits = cfg.timing.payload_fitting(cfg.upstream, dur).min(r.bytes_expected);
            granted.push((r.sfu, fits));
        }
    }
    let tamap = Tamap { cycle_start, cycle_len_ns: cycle as u32, entries };
    debug_assert!(tamap.validate().is_ok(), "{tamap:?}");
    (tamap, granted, unplaced)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(min_slot: u64) -> DbaConfig {
        DbaConfig {
            cycle_ns: 125_000,
            guard_ns: 100,
            omci_slot_ns: 2_000,
            min_slot_ns: min_slot,
            upstream: Rate(1_000_000_000),
            timing: BurstTiming::Raw,
        }
    }

    fn req(sfu: u16, bytes: u64) -> UplinkBwRequest {
        UplinkBwRequest { sfu: NodeId(sfu), bytes_expected: bytes, tcont: TcontId::data(NodeId(sfu)), ready_at: None }
    }

    #[test]
    fn no_requests_only_omci_slot() {
        let mut d = Dba::new(cfg(1_000));
        let t = d.generate_tamap(SimTime(0), NodeId(1));
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].tcont, TcontId::OMCI);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn proportional_split_one_to_three() {
        // Residual after OMCI, guards and minimum slots holds exactly 4000
        // bytes at 1 Gb/s (32 us).
        let min = 1_000u64;
        let cycle = 2_000 + 100 + 2 * 100 + 2 * min + 32_000;
        let c = DbaConfig { cycle_ns: cycle, ..cfg(min) };
        let (t, granted, _) = allocate(&c, SimTime(0), NodeId(1), &[], &[req(1, 1000), req(2, 3000)]);
        let d1 = t.entries[1].duration_ns as u64 - min;
        let d2 = t.entries[2].duration_ns as u64 - min;
        assert_eq!((d1, d2), (8_000, 24_000));
        assert_eq!(granted, vec![(NodeId(1), 1000), (NodeId(2), 3000)]);
        let used: u64 = t.entries.iter().map(|e| e.duration_ns as u64).sum::<u64>() + 3 * 100;
        assert_eq!(used, cycle);
    }

    #[test]
    fn oversubscription_halves_and_carries() {
        let mut d = Dba::new(cfg(0));
        // 125000 - 2100 (OMCI + guard) - 200 (two guards) = 122700 ns of
        // data time, i.e. 15337 bytes. Each asks for 15000: about 2x.
        let cap = 15_000u64;
        d.request(req(1, cap));
        d.request(req(2, cap));
        let t = d.generate_tamap(SimTime(0), NodeId(1));
        assert!(t.validate().is_ok());
        let each = 122_700 / 2 / 8;
        assert_eq!(d.demand(NodeId(1)), cap - each);
        assert_eq!(d.demand(NodeId(2)), cap - each);
        let t2 = d.generate_tamap(SimTime(125_000), NodeId(2));
        assert_eq!(t2.entries.len(), 3);
        assert_eq!(d.demand(NodeId(1)), 0);
        assert_eq!(d.demand(NodeId(2)), 0);
    }

    #[test]
    fn anchored_request_lands_on_ready_time() {
        let mut d = Dba::new(cfg(1_000));
        d.request(UplinkBwRequest { ready_at: Some(SimTime(150_000)), ..req(3, 1000) });
        d.request(req(1, 500));
        let t0 = d.generate_tamap(SimTime(0), NodeId(1));
        assert!(t0.entries.iter().all(|e| e.sfu != NodeId(3)));
        let t1 = d.generate_tamap(SimTime(125_000), NodeId(1));
        let e = t1.entries.iter().find(|e| e.sfu == NodeId(3)).unwrap();
        assert_eq!(125_000 + e.offset_ns as u64, 150_000);
        assert_eq!(e.duration_ns, 8_000);
    }

    #[test]
    fn framed_timing_includes_fec_and_header() {
        let t = BurstTiming::Framed { overhead_bytes: 23 };
        let r = Rate(1_000_000_000);
        assert_eq!(t.time_ns(r, 216), 255 * 8);
        assert_eq!(t.payload_fitting(r, 255 * 8), 216);
    }
}
