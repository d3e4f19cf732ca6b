use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::SfuStatusReport;
use crate::links::{InterferenceGraph, WifiParams};
use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrantReason {
    Downlink,
    UplinkTrigger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AirGrant {
    pub sfu: NodeId,
    pub start: SimTime,
    pub max_duration_ns: u64,
    pub reason: GrantReason,
}

impl AirGrant {
    pub fn end(&self) -> SimTime {
        self.start + self.max_duration_ns
    }
}

/// One SFU's claim on airtime for the current scheduling round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrantDemand {
    pub sfu: NodeId,
    pub priority: u8,
    pub bytes: u64,
    pub duration_ns: u64,
    pub reason: GrantReason,
}

/// Grant precedence: highest priority first, then larger backlog, then
/// lower node id.
pub fn grant_order(a: &SfuStatusReport, b: &SfuStatusReport) -> Ordering {
    key(a.top_priority.unwrap_or(0), a.total_bytes(), a.sfu).cmp(&key(b.top_priority.unwrap_or(0), b.total_bytes(), b.sfu))
}

fn key(priority: u8, bytes: u64, sfu: NodeId) -> (std::cmp::Reverse<u8>, std::cmp::Reverse<u64>, NodeId) {
    (std::cmp::Reverse(priority), std::cmp::Reverse(bytes), sfu)
}

/// Airtime to drain `bytes` in `frames` MPDUs, split into aggregates no
/// larger than the cell limit.
pub fn needed_airtime(params: &WifiParams, bytes: u64, frames: u64) -> u64 {
    if bytes == 0 {
        return 0;
    }
    let txs = bytes.div_ceil(params.max_aggregate_bytes as u64);
    txs * (params.preamble_ns + params.ack_overhead_ns)
        + params.air_rate.tx_time_ns((bytes + frames * params.mac_overhead_bytes as u64) as usize)
}

/// Place demands one after another in precedence order. Each grant starts
/// no earlier than `base` and after every earlier grant (from `prior` or
/// this round) to the same or a conflicting cell. `align` may push a start
/// later, never earlier.
pub fn sequence_grants(
    demands: &[GrantDemand],
    graph: &InterferenceGraph,
    base: SimTime,
    prior: &[AirGrant],
    mut align: impl FnMut(&GrantDemand, SimTime) -> SimTime,
) -> Vec<AirGrant> {
    let mut order: Vec<&GrantDemand> = demands.iter().filter(|d| d.duration_ns > 0).collect();
    order.sort_by_key(|d| key(d.priority, d.bytes, d.sfu));
    let mut out: Vec<AirGrant> = Vec::with_capacity(order.len());
    for d in order {
        let mut start = base;
        for g in prior.iter().chain(out.iter()) {
            if g.sfu == d.sfu || graph.conflicts(g.sfu, d.sfu) {
                start = start.max(g.end());
            }
        }
        let aligned = align(d, start);
        assert!(aligned >= start, "alignment moved grant for {} earlier", d.sfu);
        out.push(AirGrant { sfu: d.sfu, start: aligned, max_duration_ns: d.duration_ns, reason: d.reason });
    }
    out
}

/// Downlink grants from status reports. SFUs with empty buffers are skipped;
/// each grant lasts the airtime its backlog needs, capped at `txop_max_ns`.
pub fn grant_downlink_airtime(
    reports: &[SfuStatusReport],
    graph: &InterferenceGraph,
    txop_max_ns: u64,
    base: SimTime,
    prior: &[AirGrant],
    params: &WifiParams,
) -> Vec<AirGrant> {
    let demands: Vec<GrantDemand> = reports
        .iter()
        .filter(|r| r.total_bytes() > 0)
        .map(|r| GrantDemand {
            sfu: r.sfu,
            priority: r.top_priority.unwrap_or(0),
            bytes: r.total_bytes(),
            duration_ns: needed_airtime(params, r.total_bytes(), r.queued_frames.max(1)).min(txop_max_ns),
            reason: GrantReason::Downlink,
        })
        .collect();
    sequence_grants(&demands, graph, base, prior, |_, s| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(sfu: u16, prio: u8, bytes: u64) -> SfuStatusReport {
        let mut r = SfuStatusReport::empty(NodeId(sfu), SimTime::ZERO);
        r.queued_bytes[(7 - prio) as usize] = bytes;
        r.queued_frames = bytes.div_ceil(1500);
        r.top_priority = Some(prio);
        r
    }

    fn pair(edge: bool) -> InterferenceGraph {
        let e = if edge { vec![(NodeId(1), NodeId(2))] } else { vec![] };
        InterferenceGraph::new([NodeId(1), NodeId(2)], &e).unwrap()
    }

    #[test]
    fn single_sfu_gets_capped_grant() {
        let p = WifiParams::default();
        let g = grant_downlink_airtime(&[report(1, 5, 100_000)], &pair(false), 2_000_000, SimTime(10), &[], &p);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].start, SimTime(10));
        assert_eq!(g[0].max_duration_ns, needed_airtime(&p, 100_000, 67).min(2_000_000));
        let g = grant_downlink_airtime(&[report(1, 5, 100_000)], &pair(false), 50_000, SimTime(10), &[], &p);
        assert_eq!(g[0].max_duration_ns, 50_000);
    }

    #[test]
    fn conflicting_pair_larger_backlog_first() {
        let p = WifiParams::default();
        let g = grant_downlink_airtime(
            &[report(2, 5, 50_000), report(1, 5, 100_000)],
            &pair(true),
            10_000_000,
            SimTime(0),
            &[],
            &p,
        );
        assert_eq!(g[0].sfu, NodeId(1));
        assert_eq!(g[1].sfu, NodeId(2));
        assert_eq!(g[1].start, g[0].end());
    }

    #[test]
    fn independent_cells_overlap() {
        let p = WifiParams::default();
        let g = grant_downlink_airtime(&[report(1, 5, 1000), report(2, 5, 1000)], &pair(false), 1_000_000, SimTime(0), &[], &p);
        assert_eq!(g[0].start, g[1].start);
    }

    #[test]
    fn empty_buffers_skipped_and_prior_respected() {
        let p = WifiParams::default();
        let prior = [AirGrant { sfu: NodeId(1), start: SimTime(0), max_duration_ns: 500, reason: GrantReason::Downlink }];
        let g = grant_downlink_airtime(&[report(1, 5, 0), report(2, 1, 10)], &pair(true), 1_000_000, SimTime(100), &prior, &p);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].start, SimTime(500));
    }

    #[test]
    fn comparator_orders_priority_then_bytes_then_id() {
        assert_eq!(grant_order(&report(1, 6, 1), &report(2, 5, 9)), Ordering::Less);
        assert_eq!(grant_order(&report(2, 5, 9), &report(1, 5, 8)), Ordering::Less);
        assert_eq!(grant_order(&report(1, 5, 9), &report(2, 5, 9)), Ordering::Less);
    }
}
