use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{InterferenceGraph, Rate};
use crate::sim::{NodeId, RngStream, SimTime};

/// Air-interface timing. ACK exchange and SIFS are folded into
/// `ack_overhead_ns`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WifiParams {
    pub air_rate: Rate,
    pub difs_ns: u64,
    pub sifs_ns: u64,
    pub slot_ns: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub preamble_ns: u64,
    pub ack_overhead_ns: u64,
    /// MAC header and FCS per aggregated MPDU.
    pub mac_overhead_bytes: usize,
    /// Largest aggregate sent in one transmission.
    pub max_aggregate_bytes: usize,
    pub retry_limit: u32,
}

impl Default for WifiParams {
    fn default() -> Self {
        WifiParams {
            air_rate: Rate(1_200_000_000),
            difs_ns: 34_000,
            sifs_ns: 16_000,
            slot_ns: 9_000,
            cw_min: 15,
            cw_max: 1023,
            preamble_ns: 40_000,
            ack_overhead_ns: 60_000,
            mac_overhead_bytes: 40,
            max_aggregate_bytes: 65_535,
            retry_limit: 7,
        }
    }
}

impl WifiParams {
    pub fn validate(&self) -> Result<(), String> {
        let pow2m1 = |v: u32| (v + 1).is_power_of_two();
        if self.air_rate.0 == 0 {
            return Err("air_rate must be positive".into());
        }
        if !pow2m1(self.cw_min) || !pow2m1(self.cw_max) || self.cw_min > self.cw_max {
            return Err(format!("cw_min {} / cw_max {} must be 2^k-1 with cw_min <= cw_max", self.cw_min, self.cw_max));
        }
        if self.slot_ns == 0 || self.max_aggregate_bytes == 0 {
            return Err("slot_ns and max_aggregate_bytes must be positive".into());
        }
        Ok(())
    }

    /// Medium occupancy of one transmission carrying `payload_bytes` in
    /// `frames` MPDUs, including preamble and acknowledgement.
    pub fn airtime_ns(&self, payload_bytes: usize, frames: usize) -> u64 {
        self.preamble_ns
            + self.air_rate.tx_time_ns(payload_bytes + frames * self.mac_overhead_bytes)
            + self.ack_overhead_ns
    }

    /// Largest payload whose airtime (as one frame) fits in `ns`.
    pub fn payload_fitting(&self, ns: u64, frames: usize) -> usize {
        let fixed = self.preamble_ns + self.ack_overhead_ns;
        if ns <= fixed {
            return 0;
        }
        self.air_rate.bytes_in(ns - fixed).saturating_sub(frames * self.mac_overhead_bytes)
    }
}

/// A Wi-Fi BSS served by one FTTR unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WifiCell {
    pub owner: NodeId,
    pub params: WifiParams,
    pub stations: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AirMode {
    Granted,
    Contended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxToken(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxOutcome {
    Success { duration_ns: u64 },
    Collision,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AirStats {
    pub transmissions: u64,
    pub successes: u64,
    pub collisions: u64,
    pub coordination_failures: u64,
    pub busy_ns: u64,
    pub bytes_sent: u64,
    pub bytes_delivered: u64,
}

#[derive(Debug, Clone)]
struct OnAir {
    token: TxToken,
    start: SimTime,
    end: SimTime,
    bytes: usize,
    collided: bool,
}

/// Shared air across all cells. Interference is binary: two cells interact
/// only if the graph has an edge between them.
#[derive(Debug, Clone)]
pub struct AirMedium {
    graph: InterferenceGraph,
    on_air: BTreeMap<NodeId, OnAir>,
    stats: BTreeMap<NodeId, AirStats>,
    next_token: u64,
}

impl AirMedium {
    pub fn new(graph: InterferenceGraph) -> Self {
        let stats = graph.cells().map(|c| (c, AirStats::default())).collect();
        AirMedium { graph, on_air: BTreeMap::new(), stats, next_token: 0 }
    }

    pub fn graph(&self) -> &InterferenceGraph {
        &self.graph
    }

    pub fn stats(&self) -> &BTreeMap<NodeId, AirStats> {
        &self.stats
    }

    pub fn transmitting(&self, cell: NodeId, now: SimTime) -> bool {
        self.on_air.get(&cell).is_some_and(|t| t.end > now)
    }

    /// Carrier sense at `cell`: true if it or any conflicting cell is on air.
    pub fn busy_for(&self, cell: NodeId, now: SimTime) -> bool {
        self.transmitting(cell, now) || self.graph.neighbors(cell).any(|n| self.transmitting(n, now))
    }

    /// Latest end time among conflicting transmissions in progress.
    pub fn busy_until(&self, cell: NodeId, now: SimTime) -> Option<SimTime> {
        std::iter::once(cell)
            .chain(self.graph.neighbors(cell))
            .filter_map(|c| self.on_air.get(&c).filter(|t| t.end > now).map(|t| t.end))
            .max()
    }

    /// Seize the medium at `cell` for `duration_ns`. The outcome is known
    /// when [`AirMedium::end`] is called at `now + duration_ns`.
    pub fn begin(&mut self, now: SimTime, cell: NodeId, duration_ns: u64, bytes: usize, mode: AirMode) -> TxToken {
        assert!(!self.transmitting(cell, now), "cell {cell} already transmitting");
        let token = TxToken(self.next_token);
        self.next_token += 1;
        let end = now + duration_ns;
        let mut collided = false;
        let neighbors: Vec<NodeId> = self.graph.neighbors(cell).collect();
        for n in neighbors {
            if let Some(t) = self.on_air.get_mut(&n).filter(|t| t.end > now) {
                if mode == AirMode::Granted {
                    self.stats.entry(cell).or_default().coordination_failures += 1;
                }
                t.collided = true;
                collided = true;
            }
        }
        let s = self.stats.entry(cell).or_default();
        s.transmissions += 1;
        s.bytes_sent += bytes as u64;
        s.busy_ns += duration_ns;
        self.on_air.insert(cell, OnAir { token, start: now, end, bytes, collided });
        token
    }

    pub fn end(&mut self, cell: NodeId, token: TxToken) -> TxOutcome {
        let t = match self.on_air.get(&cell) {
            Some(t) if t.token == token => self.on_air.remove(&cell).expect("present"),
            _ => panic!("unknown transmission {token:?} at {cell}"),
        };
        let s = self.stats.entry(cell).or_default();
        if t.collided {
            s.collisions += 1;
            TxOutcome::Collision
        } else {
            s.successes += 1;
            s.bytes_delivered += t.bytes as u64;
            TxOutcome::Success { duration_ns: t.end - t.start }
        }
    }
}

/// Distributed coordination function state for one transmitter.
///
/// Carrier sense is instantaneous, so two cells collide only when their
/// backoff counters expire in the same slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csma {
    cw: u32,
    remaining: Option<u32>,
    count_start: SimTime,
    attempt_at: Option<SimTime>,
    retries: u32,
}

impl Csma {
    pub fn new(params: &WifiParams) -> Self {
        Csma { cw: params.cw_min, remaining: None, count_start: SimTime::ZERO, attempt_at: None, retries: 0 }
    }

    pub fn cw(&self) -> u32 {
        self.cw
    }

    pub fn retries(&self) -> u32 {
        self.retries
    }

    pub fn attempt_at(&self) -> Option<SimTime> {
        self.attempt_at
    }

    pub fn remaining(&self) -> Option<u32> {
        self.remaining
    }

    /// Start or resume counting on an idle medium. Draws a fresh backoff from
    /// `rng` if none is pending. Returns the transmit time.
    pub fn arm(&mut self, now: SimTime, params: &WifiParams, rng: &mut RngStream) -> SimTime {
        let r = *self.remaining.get_or_insert_with(|| rng.uniform_inclusive(self.cw));
        self.count_start = now + params.difs_ns;
        let at = self.count_start + r as u64 * params.slot_ns;
        self.attempt_at = Some(at);
        at
    }

    /// The medium became busy at `now`. Returns false if this station is
    /// already committed to transmit in the current slot.
    pub fn freeze(&mut self, now: SimTime, params: &WifiParams) -> bool {
        let Some(at) = self.attempt_at else { return true };
        if at <= now {
            return false;
        }
        if now > self.count_start {
            let elapsed = ((now - self.count_start) / params.slot_ns) as u32;
            if let Some(r) = self.remaining.as_mut() {
                *r -= elapsed.min(*r);
            }
        }
        self.attempt_at = None;
        true
    }

    /// Called when the counter expires and the station transmits.
    pub fn fire(&mut self) {
        self.attempt_at = None;
        self.remaining = None;
    }

    pub fn on_success(&mut self, params: &WifiParams) {
        self.cw = params.cw_min;
        self.retries = 0;
    }

    /// Returns false when the retry limit is exhausted; the frame is dropped
    /// and the window resets.
    pub fn on_collision(&mut self, params: &WifiParams) -> bool {
        self.retries += 1;
        if self.retries > params.retry_limit {
            self.on_success(params);
            return false;
        }
        self.cw = (self.cw * 2 + 1).min(params.cw_max);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cells(edge: bool) -> AirMedium {
        let edges = if edge { vec![(NodeId(1), NodeId(2))] } else { vec![] };
        AirMedium::new(InterferenceGraph::new([NodeId(1), NodeId(2)], &edges).unwrap())
    }

    #[test]
    fn idle_contended_transmits_after_difs_plus_backoff() {
        let p = WifiParams::default();
        let mut rng = RngStream::new(9, 1);
        let mut probe = rng.clone();
        let mut c = Csma::new(&p);
        let at = c.arm(SimTime(1000), &p, &mut rng);
        let k = probe.uniform_inclusive(p.cw_min) as u64;
        assert_eq!(at, SimTime(1000 + p.difs_ns + k * p.slot_ns));
        let mut air = two_cells(false);
        c.fire();
        let d = p.airtime_ns(1500, 1);
        let tok = air.begin(at, NodeId(1), d, 1500, AirMode::Contended);
        assert_eq!(air.end(NodeId(1), tok), TxOutcome::Success { duration_ns: d });
    }

    #[test]
    fn simultaneous_start_collides_for_both() {
        let mut air = two_cells(true);
        let a = air.begin(SimTime(0), NodeId(1), 100, 10, AirMode::Contended);
        let b = air.begin(SimTime(0), NodeId(2), 100, 10, AirMode::Contended);
        assert_eq!(air.end(NodeId(1), a), TxOutcome::Collision);
        assert_eq!(air.end(NodeId(2), b), TxOutcome::Collision);
        assert_eq!(air.stats()[&NodeId(1)].coordination_failures, 0);
    }

    #[test]
    fn sequential_grants_do_not_collide() {
        let mut air = two_cells(true);
        let a = air.begin(SimTime(0), NodeId(1), 100, 10, AirMode::Granted);
        assert_eq!(air.end(NodeId(1), a), TxOutcome::Success { duration_ns: 100 });
        let b = air.begin(SimTime(100), NodeId(2), 100, 10, AirMode::Granted);
        assert_eq!(air.end(NodeId(2), b), TxOutcome::Success { duration_ns: 100 });
    }

    #[test]
    fn granted_overlap_counts_coordination_failure() {
        let mut air = two_cells(true);
        air.begin(SimTime(0), NodeId(1), 100, 10, AirMode::Granted);
        air.begin(SimTime(50), NodeId(2), 100, 10, AirMode::Granted);
        assert_eq!(air.stats()[&NodeId(2)].coordination_failures, 1);
    }

    #[test]
    fn non_conflicting_cells_overlap_freely() {
        let mut air = two_cells(false);
        let a = air.begin(SimTime(0), NodeId(1), 100, 10, AirMode::Contended);
        let b = air.begin(SimTime(0), NodeId(2), 100, 10, AirMode::Contended);
        assert!(matches!(air.end(NodeId(1), a), TxOutcome::Success { .. }));
        assert!(matches!(air.end(NodeId(2), b), TxOutcome::Success { .. }));
    }

    #[test]
    fn freeze_keeps_unspent_slots() {
        let p = WifiParams::default();
        let mut c = Csma { cw: 15, remaining: Some(10), count_start: SimTime::ZERO, attempt_at: None, retries: 0 };
        let mut rng = RngStream::new(1, 1);
        let at = c.arm(SimTime(0), &p, &mut rng);
        assert_eq!(at, SimTime(p.difs_ns + 10 * p.slot_ns));
        assert!(c.freeze(SimTime(p.difs_ns + 3 * p.slot_ns + 1), &p));
        assert_eq!(c.remaining(), Some(7));
        let at2 = c.arm(SimTime(1_000_000), &p, &mut rng);
        assert_eq!(at2, SimTime(1_000_000 + p.difs_ns + 7 * p.slot_ns));
        assert!(!c.freeze(at2, &p));
    }

    #[test]
    fn window_doubles_and_caps() {
        let p = WifiParams::default();
        let mut c = Csma::new(&p);
        let mut seen = vec![c.cw()];
        while c.on_collision(&p) {
            seen.push(c.cw());
        }
        assert_eq!(seen, vec![15, 31, 63, 127, 255, 511, 1023, 1023]);
        assert_eq!(c.cw(), 15);
    }

    #[test]
    fn params_validation() {
        assert!(WifiParams::default().validate().is_ok());
        let bad = WifiParams { cw_min: 16, ..WifiParams::default() };
        assert!(bad.validate().is_err());
    }
}
