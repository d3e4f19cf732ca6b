//! Per-run statistics, invariant checks and the output files of a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::energy::{account_energy, EnergyLedger, EnergyReport, PowerState};
use crate::links::{AirStats, OpticalStats};
use crate::management::{AlarmKind, AlarmLog, MibStore, Olt, OltStats};
use crate::network::{Direction, Packet, Trace, World};
use crate::sim::{EventStats, NodeId, SimTime, TraceDigest};

#[derive(Debug, Clone)]
pub struct FlowStats {
    pub name: String,
    pub dir: Direction,
    pub sfu: NodeId,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Subset of `dropped` evicted from an MFU sleep buffer.
    pub sleep_dropped: u64,
    pub latencies: Vec<u64>,
}

impl FlowStats {
    pub fn new(name: &str, dir: Direction, sfu: NodeId) -> Self {
        FlowStats {
            name: name.to_string(),
            dir,
            sfu,
            offered: 0,
            delivered: 0,
            dropped: 0,
            sleep_dropped: 0,
            latencies: Vec::new(),
        }
    }
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[u64], p: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowSummary {
    pub name: String,
    pub dir: &'static str,
    pub sfu: String,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub sleep_dropped: u64,
    /// Still queued somewhere at the horizon.
    pub in_flight: u64,
    /// `dropped + in_flight`; `delivered + lost == offered`.
    pub lost: u64,
    pub p50_ns: Option<u64>,
    pub p95_ns: Option<u64>,
    pub p99_ns: Option<u64>,
    pub mean_ns: Option<u64>,
    pub max_ns: Option<u64>,
}

impl FlowSummary {
    fn of(f: &FlowStats) -> Self {
        let mut l = f.latencies.clone();
        l.sort_unstable();
        let mean = (!l.is_empty()).then(|| (l.iter().map(|&x| x as u128).sum::<u128>() / l.len() as u128) as u64);
        FlowSummary {
            name: f.name.clone(),
            dir: match f.dir {
                Direction::Down => "down",
                Direction::Up => "up",
            },
            sfu: f.sfu.to_string(),
            offered: f.offered,
            delivered: f.delivered,
            dropped: f.dropped,
            sleep_dropped: f.sleep_dropped,
            in_flight: f.offered.saturating_sub(f.delivered + f.dropped),
            lost: f.offered.saturating_sub(f.delivered),
            p50_ns: percentile(&l, 50.0),
            p95_ns: percentile(&l, 95.0),
            p99_ns: percentile(&l, 99.0),
            mean_ns: mean,
            max_ns: l.last().copied(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct AirTotals {
    pub transmissions: u64,
    pub collisions: u64,
    pub coordination_failures: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ForwardingSummary {
    pub bursts: u64,
    pub zero_delay: u64,
    pub max_ns: u64,
    pub mean_ns: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelaySummary {
    pub peak_bytes: u64,
    pub overflows: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmciSummary {
    pub olt: OltStats,
    pub timeouts: u64,
    pub unknown_target: u64,
    pub upstream_responses: u64,
    pub upstream_max_delay_ns: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlarmSummary {
    pub total: usize,
    pub by_kind: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchedulingSummary {
    pub grants: usize,
    pub late_grants: u64,
    pub wire_checked_frames: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSummary {
    pub deep_sleep_commands: usize,
    pub power_reports: usize,
    pub sleep_dropped: u64,
}

/// Everything reported about one run. Field order is fixed so that the
/// serialized form is stable.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub fingerprint: String,
    pub seed: u64,
    pub mode: &'static str,
    pub duration_ms: u64,
    pub flows: Vec<FlowSummary>,
    pub air: BTreeMap<String, AirStats>,
    pub air_totals: AirTotals,
    pub optical: OpticalStats,
    pub forwarding: ForwardingSummary,
    pub relay: BTreeMap<String, RelaySummary>,
    pub scheduling: SchedulingSummary,
    pub omci: OmciSummary,
    pub alarms: AlarmSummary,
    pub power: PowerSummary,
    pub energy: Option<EnergyReport>,
    pub events: EventStats,
    pub invariant_breaches: Vec<String>,
    pub digest: TraceDigest,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn flow(&self, name: &str) -> Option<&FlowSummary> {
        self.flows.iter().find(|f| f.name == name)
    }

    /// Largest p99 latency over all flows with samples.
    pub fn max_p99_ns(&self) -> Option<u64> {
        self.flows.iter().filter_map(|f| f.p99_ns).max()
    }
}

/// Result of a run: the summary plus raw records for oracles.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub flows: Vec<FlowStats>,
    pub alarms: AlarmLog,
    pub schedule_lines: Vec<String>,
    pub trace: Trace,
    pub mibs: BTreeMap<NodeId, MibStore>,
    pub ledger: EnergyLedger,
    pub olt: Olt,
    pub horizon: SimTime,
}

impl RunOutput {
    pub fn breaches(&self) -> &[String] {
        &self.summary.invariant_breaches
    }

    pub fn flows_csv(&self) -> String {
        let mut out = String::from("flow,dir,sfu,offered,delivered,lost,dropped,sleep_dropped,in_flight,p50_ns,p95_ns,p99_ns,mean_ns,max_ns\n");
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for f in &self.summary.flows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                f.name,
                f.dir,
                f.sfu,
                f.offered,
                f.delivered,
                f.lost,
                f.dropped,
                f.sleep_dropped,
                f.in_flight,
                opt(f.p50_ns),
                opt(f.p95_ns),
                opt(f.p99_ns),
                opt(f.mean_ns),
                opt(f.max_ns)
            )
            .expect("write to string");
        }
        out
    }

    pub fn alarm_log(&self) -> String {
        lines(&self.alarms.lines())
    }

    pub fn schedule_dump(&self) -> String {
        lines(&self.schedule_lines)
    }

    /// Write `summary.json`, `flows.csv`, `alarms.log` and `schedule.txt`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), self.summary.to_json())?;
        std::fs::write(dir.join("flows.csv"), self.flows_csv())?;
        std::fs::write(dir.join("alarms.log"), self.alarm_log())?;
        std::fs::write(dir.join("schedule.txt"), self.schedule_dump())?;
        Ok(())
    }
}

fn lines(v: &[String]) -> String {
    v.iter().map(|l| format!("{l}\n")).collect()
}

impl World {
    pub(crate) fn deliver(&mut self, p: &Packet, at: SimTime) {
        let f = &mut self.stats[p.flow as usize];
        f.delivered += 1;
        f.latencies.push(at - p.created);
    }

    pub(crate) fn drop_pkt(&mut self, p: &Packet) {
        self.stats[p.flow as usize].dropped += 1;
    }
}

/// Every deep-sleep command must follow light-sleep reports from all SFUs.
fn deep_sleep_safety(trace: &Trace, sfus: &[NodeId]) -> Result<(), String> {
    for &t in &trace.deep_sleep_commands {
        for &s in sfus {
            let last = trace.power_reports.iter().rfind(|(at, n, _)| *at <= t && *n == s).map(|r| r.2);
            if last != Some(PowerState::LightSleep) {
                return Err(format!("deep sleep commanded at {t} while {s} last reported {last:?}"));
            }
        }
    }
    Ok(())
}

pub(crate) fn collect(mut w: World, digest: TraceDigest, events: EventStats) -> RunOutput {
    let horizon = w.p.horizon;
    let mut breaches = std::mem::take(&mut w.breaches);
    if !events.conserved() {
        breaches.push(format!("event_conservation: {events:?}"));
    }
    let energy = match account_energy(&mut w.ledger, horizon, &w.p.profile) {
        Ok(r) => Some(r),
        Err(e) => {
            breaches.push(format!("ledger_partition: {e}"));
            None
        }
    };
    for f in &w.stats {
        if f.delivered + f.dropped > f.offered {
            breaches.push(format!("flow_conservation: {} delivered {} dropped {} of {}", f.name, f.delivered, f.dropped, f.offered));
        }
    }
    let sfus: Vec<NodeId> = w.sfus.keys().copied().collect();
    if let Err(e) = deep_sleep_safety(&w.trace, &sfus) {
        breaches.push(format!("deep_sleep_safety: {e}"));
    }

    let mut air_totals = AirTotals::default();
    let mut air = BTreeMap::new();
    for (n, s) in w.air.stats() {
        air_totals.transmissions += s.transmissions;
        air_totals.collisions += s.collisions;
        air_totals.coordination_failures += s.coordination_failures;
        air.insert(n.to_string(), *s);
    }
    let mut by_kind = BTreeMap::new();
    for k in [AlarmKind::LinkDown, AlarmKind::Unresponsive, AlarmKind::SlotViolation, AlarmKind::BufferOverflow] {
        by_kind.insert(k.name(), w.alarms.count(k));
    }
    let sleep_dropped = w.stats.iter().map(|f| f.sleep_dropped).sum();
    let sc = &w.scenario;
    let summary = Summary {
        scenario: sc.name.clone(),
        fingerprint: sc.fingerprint(),
        seed: sc.seed,
        mode: w.p.mode.name(),
        duration_ms: sc.duration_ms,
        flows: w.stats.iter().map(FlowSummary::of).collect(),
        air,
        air_totals,
        optical: w.optical.stats,
        forwarding: ForwardingSummary {
            bursts: w.fwd.count,
            zero_delay: w.fwd.zero,
            max_ns: w.fwd.max_ns,
            mean_ns: if w.fwd.count == 0 { 0 } else { (w.fwd.sum_ns / w.fwd.count as u128) as u64 },
        },
        relay: w
            .sfus
            .iter()
            .map(|(n, f)| (n.to_string(), RelaySummary { peak_bytes: f.relay.peak, overflows: f.relay.overflows }))
            .collect(),
        scheduling: SchedulingSummary {
            grants: w.trace.grants.len(),
            late_grants: w.late_grants,
            wire_checked_frames: w.wire_checked,
        },
        omci: OmciSummary {
            olt: w.olt.stats,
            timeouts: w.omci_timeouts,
            unknown_target: w.adapter.unknown_target,
            upstream_responses: w.omci_up_count,
            upstream_max_delay_ns: w.omci_up_max_ns,
        },
        alarms: AlarmSummary { total: w.alarms.alarms().len(), by_kind },
        power: PowerSummary {
            deep_sleep_commands: w.trace.deep_sleep_commands.len(),
            power_reports: w.trace.power_reports.len(),
            sleep_dropped,
        },
        energy,
        events,
        invariant_breaches: breaches,
        digest,
    };
    let mibs = w.sfus.iter().map(|(&n, f)| (n, f.mib.clone())).collect();
    let mut trace = std::mem::take(&mut w.trace);
    RunOutput {
        summary,
        flows: w.stats,
        alarms: w.alarms,
        schedule_lines: std::mem::take(&mut trace.schedule_lines),
        trace,
        mibs,
        ledger: w.ledger,
        olt: w.olt,
        horizon,
    }
}
