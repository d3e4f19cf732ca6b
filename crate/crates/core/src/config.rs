//! Scenario files: a single TOML document describing topology, links,
//! scheduler mode, traffic, power profile and staged events.
//!
//! Errors carry the line and column of the offending key so a bad scenario
//! can be fixed without guesswork.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::{LoadClass, PolicyThresholds, PowerProfile};
use crate::frames::ServiceClass;
use crate::links::{Rate, WifiParams};
use crate::scheduling::{ModeLatencies, SchedulerMode};
use crate::sim::NodeId;

/// A schema or validation failure with its source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub file: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.file, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.file, self.message),
            _ => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub duration_ms: u64,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub conflicts: Vec<[String; 2]>,
    #[serde(default)]
    pub optical: OpticalConfig,
    #[serde(default)]
    pub wifi: WifiConfig,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
    #[serde(default)]
    pub relay: RelayConfig,
    #[serde(default)]
    pub management: ManagementConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "sfu")]
    pub sfus: Vec<SfuConfig>,
    #[serde(default, rename = "flow")]
    pub flows: Vec<FlowConfig>,
    #[serde(default, rename = "event")]
    pub events: Vec<EventConfig>,
}

fn default_seed() -> u64 {
    1
}

fn default_mode() -> String {
    SchedulerMode::DistributedBaseline.name().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalConfig {
    pub downstream_bps: u64,
    pub upstream_bps: u64,
    /// Downstream frame period and upstream allocation cycle.
    pub cycle_ns: u64,
    pub guard_ns: u64,
    pub omci_slot_ns: u64,
    pub min_slot_ns: u64,
    /// Preamble and delimiter bytes ahead of each upstream burst.
    pub burst_overhead_bytes: usize,
    /// Delay from the start of a downstream frame to the start of the
    /// upstream cycle its map describes.
    pub map_lead_ns: u64,
    /// Fixed latency of SFU-to-MFU control messages (status, requests,
    /// power reports).
    pub ctrl_up_ns: u64,
    /// Serialize and re-parse every downstream frame through the full codec
    /// chain.
    pub wire_check: bool,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        OpticalConfig {
            downstream_bps: 1_000_000_000,
            upstream_bps: 1_000_000_000,
            cycle_ns: 125_000,
            guard_ns: 64,
            omci_slot_ns: 2_000,
            min_slot_ns: 2_000,
            burst_overhead_bytes: 16,
            map_lead_ns: 10_000,
            ctrl_up_ns: 10_000,
            wire_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WifiConfig {
    pub air_bps: u64,
    pub difs_ns: u64,
    pub sifs_ns: u64,
    pub slot_ns: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub preamble_ns: u64,
    pub ack_overhead_ns: u64,
    pub mac_overhead_bytes: usize,
    pub max_aggregate_bytes: usize,
    pub retry_limit: u32,
    /// Drop-tail limit of each SFU's downlink Wi-Fi queue.
    pub queue_limit_bytes: u64,
}

impl Default for WifiConfig {
    fn default() -> Self {
        let p = WifiParams::default();
        WifiConfig {
            air_bps: p.air_rate.0,
            difs_ns: p.difs_ns,
            sifs_ns: p.sifs_ns,
            slot_ns: p.slot_ns,
            cw_min: p.cw_min,
            cw_max: p.cw_max,
            preamble_ns: p.preamble_ns,
            ack_overhead_ns: p.ack_overhead_ns,
            mac_overhead_bytes: p.mac_overhead_bytes,
            max_aggregate_bytes: p.max_aggregate_bytes,
            retry_limit: p.retry_limit,
            queue_limit_bytes: 4_000_000,
        }
    }
}

impl WifiConfig {
    pub fn params(&self) -> WifiParams {
        WifiParams {
            air_rate: Rate(self.air_bps),
            difs_ns: self.difs_ns,
            sifs_ns: self.sifs_ns,
            slot_ns: self.slot_ns,
            cw_min: self.cw_min,
            cw_max: self.cw_max,
            preamble_ns: self.preamble_ns,
            ack_overhead_ns: self.ack_overhead_ns,
            mac_overhead_bytes: self.mac_overhead_bytes,
            max_aggregate_bytes: self.max_aggregate_bytes,
            retry_limit: self.retry_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    /// Status report and grant round period.
    pub status_cycle_ns: u64,
    pub txop_max_ns: u64,
    /// Earliest grant start relative to the grant round.
    pub grant_lead_ns: u64,
    /// Pre-grant upstream slots for OFDMA uplink rounds.
    pub ofdma_coordination: bool,
    /// Largest resource unit payload per station per round.
    pub ru_max_bytes: u64,
    /// Write every grant and TAMap to the schedule dump.
    pub dump: bool,
    pub latencies: ModeLatencies,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            status_cycle_ns: 1_000_000,
            txop_max_ns: 2_000_000,
            grant_lead_ns: 300_000,
            ofdma_coordination: true,
            ru_max_bytes: 6_000,
            dump: false,
            latencies: ModeLatencies::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelayConfig {
    pub sample_rate_hz: u64,
    pub bit_width: u32,
    pub buffer_bytes: u64,
}

impl Default for RelayConfig {
    fn default() -> Self {
        RelayConfig { sample_rate_hz: 160_000_000, bit_width: 24, buffer_bytes: 4_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManagementConfig {
    pub port_id: u8,
    /// One-way latency of the OLT to MFU pipe.
    pub olt_latency_ns: u64,
    pub poll_interval_ns: u64,
    pub k_miss: u32,
    pub omci_window: usize,
    pub omci_timeout_ns: u64,
    pub liveness: bool,
}

impl Default for ManagementConfig {
    fn default() -> Self {
        ManagementConfig {
            port_id: 1,
            olt_latency_ns: 100_000,
            poll_interval_ns: 1_000_000_000,
            k_miss: 2,
            omci_window: 1,
            omci_timeout_ns: 20_000_000,
            liveness: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    /// Enable sleep and reduced-power policies. When off, nodes only move
    /// between Active and Idle.
    pub savings: bool,
    pub sleep_buffer_frames: usize,
    pub profile: PowerProfile,
    pub thresholds: PolicyThresholds,
    pub predicted_load: Vec<PredictedLoad>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            savings: true,
            sleep_buffer_frames: 8_192,
            profile: PowerProfile::default(),
            thresholds: PolicyThresholds::default(),
            predicted_load: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictedLoad {
    pub from_ms: u64,
    pub to_ms: u64,
    pub load: LoadClass,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory for run outputs; the CLI `--out` flag overrides it.
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfuConfig {
    pub id: u16,
    #[serde(default = "default_prop")]
    pub prop_delay_ns: u64,
    #[serde(default = "default_stations")]
    pub stations: u32,
    #[serde(default)]
    pub iot_resident: bool,
    /// Id in the OMCI routing bytes; defaults to the node id.
    #[serde(default)]
    pub omci_id: Option<u8>,
}

fn default_prop() -> u64 {
    100
}

fn default_stations() -> u32 {
    1
}

impl SfuConfig {
    pub fn node(&self) -> NodeId {
        NodeId(self.id)
    }

    pub fn name(&self) -> String {
        self.node().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub name: String,
    /// "wan" for downlink, or an SFU name for uplink.
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub sta: u32,
    pub class: ServiceClass,
    pub priority: u8,
    pub size_bytes: u32,
    pub arrival: Arrival,
    #[serde(default)]
    pub start_ms: u64,
    #[serde(default)]
    pub stop_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Arrival {
    /// Evenly spaced frames at `rate_bps`.
    Constant { rate_bps: u64 },
    /// Constant rate during on periods. Period lengths are fixed, or drawn
    /// from exponential distributions with these means when `random`.
    OnOff {
        rate_bps: u64,
        on_ms: u64,
        off_ms: u64,
        #[serde(default)]
        random: bool,
    },
    /// `count` frames at the same instant, repeated every `every_ms` if set.
    Batch {
        count: u32,
        #[serde(default)]
        every_ms: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventConfig {
    pub at_ms: u64,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// The SFU stops responding to anything.
    KillSfu { sfu: String },
    RecoverSfu { sfu: String },
    FiberCut,
    FiberRestore,
    /// `count` random Set requests from the OLT. `unknown_targets` extra
    /// routing ids with no SFU behind them are mixed into the target pool.
    ProvisioningStorm {
        count: u32,
        #[serde(default)]
        unknown_targets: u8,
    },
    /// Fault injection: the next TAMap with at least two data slots is
    /// emitted with the second slot moved onto the first.
    OverlapSlots,
}

/// Position of a value inside the scenario document, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seg {
    Key(&'static str),
    Index(usize),
}

struct Invalid {
    path: Vec<Seg>,
    message: String,
}

fn bad(path: Vec<Seg>, message: impl Into<String>) -> Invalid {
    Invalid { path, message: message.into() }
}

use Seg::{Index as I, Key as K};

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Scenario, ConfigError> {
        let file = path.display().to_string();
        let src = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { file: file.clone(), line: None, column: None, message: e.to_string() })?;
        Scenario::parse(&src, &file)
    }

    /// Parse and validate `src`. `file` only labels diagnostics.
    pub fn parse(src: &str, file: &str) -> Result<Scenario, ConfigError> {
        let scenario: Scenario = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(src, s.start)).unzip();
            ConfigError { file: file.to_string(), line, column, message: e.message().trim().to_string() }
        })?;
        if let Err(inv) = scenario.check() {
            let (line, column) = locate(src, &inv.path).map(|s| line_col(src, s.start)).unzip();
            return Err(ConfigError { file: file.to_string(), line, column, message: inv.message });
        }
        Ok(scenario)
    }

    /// Re-validate after CLI overrides. Positions refer to `src`.
    pub fn revalidate(&self, src: &str, file: &str) -> Result<(), ConfigError> {
        self.check().map_err(|inv| {
            let (line, column) = locate(src, &inv.path).map(|s| line_col(src, s.start)).unzip();
            ConfigError { file: file.to_string(), line, column, message: inv.message }
        })
    }

    pub fn scheduler_mode(&self) -> SchedulerMode {
        SchedulerMode::parse(&self.mode).expect("validated")
    }

    pub fn horizon_ns(&self) -> u64 {
        self.duration_ms * 1_000_000
    }

    pub fn sfu_nodes(&self) -> Vec<NodeId> {
        self.sfus.iter().map(SfuConfig::node).collect()
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.sfus.iter().find(|s| s.name() == name).map(SfuConfig::node)
    }

    /// Hash of everything that defines the offered traffic and topology:
    /// runs with equal fingerprints may be compared metric by metric. Mode
    /// and energy-saving switches are left out.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Basis<'a> {
            seed: u64,
            duration_ms: u64,
            conflicts: &'a [[String; 2]],
            sfus: &'a [SfuConfig],
            flows: &'a [FlowConfig],
            events: &'a [EventConfig],
        }
        let basis = Basis {
            seed: self.seed,
            duration_ms: self.duration_ms,
            conflicts: &self.conflicts,
            sfus: &self.sfus,
            flows: &self.flows,
            events: &self.events,
        };
        let json = serde_json::to_vec(&basis).expect("serializable");
        let digest = Sha256::digest(&json);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn check(&self) -> Result<(), Invalid> {
        if self.duration_ms == 0 {
            return Err(bad(vec![K("duration_ms")], "duration_ms must be positive"));
        }
        if self.duration_ms > 365 * 24 * 3_600_000 {
            return Err(bad(vec![K("duration_ms")], "duration_ms longer than a year"));
        }
        if SchedulerMode::parse(&self.mode).is_none() {
            let names: Vec<&str> = SchedulerMode::ALL.iter().map(|m| m.name()).collect();
            return Err(bad(vec![K("mode")], format!("unknown mode {:?}; expected one of {}", self.mode, names.join(", "))));
        }
        self.check_optical()?;
        self.check_wifi()?;
        self.check_scheduler()?;
        self.check_energy()?;
        self.check_management()?;
        if self.relay.sample_rate_hz == 0 || self.relay.bit_width == 0 {
            return Err(bad(vec![K("relay")], "relay sample_rate_hz and bit_width must be positive"));
        }
        self.check_topology()?;
        self.check_flows()?;
        self.check_events()
    }

    fn check_optical(&self) -> Result<(), Invalid> {
        let o = &self.optical;
        let p = |k| vec![K("optical"), K(k)];
        for (k, v) in [("downstream_bps", o.downstream_bps), ("upstream_bps", o.upstream_bps), ("cycle_ns", o.cycle_ns)] {
            if v == 0 {
                return Err(bad(p(k), format!("{k} must be positive")));
            }
        }
        if o.cycle_ns > u32::MAX as u64 {
            return Err(bad(p("cycle_ns"), "cycle_ns must fit in 32 bits"));
        }
        if o.omci_slot_ns == 0 {
            return Err(bad(p("omci_slot_ns"), "omci_slot_ns must be positive"));
        }
        if o.omci_slot_ns + 2 * o.guard_ns + o.min_slot_ns > o.cycle_ns {
            return Err(bad(p("cycle_ns"), "cycle too short for the OMCI slot, guards and minimum slot"));
        }
        if o.ctrl_up_ns == 0 {
            return Err(bad(p("ctrl_up_ns"), "ctrl_up_ns must be positive"));
        }
        if o.map_lead_ns >= o.cycle_ns {
            return Err(bad(p("map_lead_ns"), "map_lead_ns must be shorter than the cycle"));
        }
        let max_prop = self.sfus.iter().map(|s| s.prop_delay_ns).max().unwrap_or(0);
        // The map must reach every SFU before its cycle begins: a generous
        // header (16 PLOAMs, 64 map entries) plus the longest fiber.
        let header = crate::frames::pcs_header_len(16, 64);
        let need = Rate(o.downstream_bps).tx_time_ns(crate::frames::pma_encoded_len(header)) + max_prop;
        if o.map_lead_ns < need {
            return Err(bad(p("map_lead_ns"), format!("map_lead_ns must be at least {need} ns to deliver the map in time")));
        }
        Ok(())
    }

    fn check_wifi(&self) -> Result<(), Invalid> {
        let w = &self.wifi;
        if let Err(e) = w.params().validate() {
            return Err(bad(vec![K("wifi")], e));
        }
        if w.queue_limit_bytes == 0 {
            return Err(bad(vec![K("wifi"), K("queue_limit_bytes")], "queue_limit_bytes must be positive"));
        }
        Ok(())
    }

    fn check_scheduler(&self) -> Result<(), Invalid> {
        let s = &self.scheduler;
        let p = |k| vec![K("scheduler"), K(k)];
        for (k, v) in [("status_cycle_ns", s.status_cycle_ns), ("txop_max_ns", s.txop_max_ns), ("ru_max_bytes", s.ru_max_bytes)] {
            if v == 0 {
                return Err(bad(p(k), format!("{k} must be positive")));
            }
        }
        if s.grant_lead_ns < 2 * self.optical.cycle_ns {
            return Err(bad(p("grant_lead_ns"), "grant_lead_ns must cover two downstream cycles so grants arrive before they start"));
        }
        let biggest = self.flows.iter().filter(|f| f.dst == "wan").map(|f| f.size_bytes as u64).max().unwrap_or(0);
        if s.ru_max_bytes < biggest {
            return Err(bad(p("ru_max_bytes"), format!("ru_max_bytes must hold the largest uplink frame ({biggest} bytes)")));
        }
        Ok(())
    }

    fn check_energy(&self) -> Result<(), Invalid> {
        let e = &self.energy;
        if let Err(m) = e.profile.validate() {
            return Err(bad(vec![K("energy"), K("profile")], m));
        }
        let th = &e.thresholds;
        if th.window_ns == 0 || th.background_max_bps > th.moderate_max_bps {
            return Err(bad(vec![K("energy"), K("thresholds")], "thresholds need window_ns > 0 and background_max_bps <= moderate_max_bps"));
        }
        for (i, pl) in e.predicted_load.iter().enumerate() {
            if pl.from_ms >= pl.to_ms {
                return Err(bad(vec![K("energy"), K("predicted_load"), I(i)], "predicted_load window must have from_ms < to_ms"));
            }
        }
        Ok(())
    }

    fn check_management(&self) -> Result<(), Invalid> {
        let m = &self.management;
        let p = |k| vec![K("management"), K(k)];
        for (k, v) in [("poll_interval_ns", m.poll_interval_ns), ("omci_timeout_ns", m.omci_timeout_ns)] {
            if v == 0 {
                return Err(bad(p(k), format!("{k} must be positive")));
            }
        }
        if m.k_miss == 0 {
            return Err(bad(p("k_miss"), "k_miss must be at least 1"));
        }
        if m.omci_window == 0 {
            return Err(bad(p("omci_window"), "omci_window must be at least 1"));
        }
        if m.omci_timeout_ns >= m.poll_interval_ns {
            return Err(bad(p("omci_timeout_ns"), "omci_timeout_ns must be shorter than poll_interval_ns"));
        }
        Ok(())
    }

    fn check_topology(&self) -> Result<(), Invalid> {
        if self.sfus.is_empty() {
            return Err(bad(vec![], "at least one [[sfu]] is required"));
        }
        let mut ids = BTreeSet::new();
        let mut omci_ids = BTreeSet::new();
        for (i, s) in self.sfus.iter().enumerate() {
            let p = |k| vec![K("sfu"), I(i), K(k)];
            if s.id == 0 || s.id > 250 {
                return Err(bad(p("id"), "sfu id must be in 1..=250"));
            }
            if !ids.insert(s.id) {
                return Err(bad(p("id"), format!("duplicate sfu id {}", s.id)));
            }
            if s.stations == 0 {
                return Err(bad(p("stations"), "an SFU needs at least one station"));
            }
            let oid = s.omci_id.unwrap_or(s.id as u8);
            if !omci_ids.insert(oid) {
                return Err(bad(p("omci_id"), format!("duplicate OMCI id {oid}")));
            }
        }
        for (i, [a, b]) in self.conflicts.iter().enumerate() {
            for n in [a, b] {
                if self.node_by_name(n).is_none() {
                    return Err(bad(vec![K("conflicts"), I(i)], format!("conflict names unknown SFU {n:?}")));
                }
            }
            if a == b {
                return Err(bad(vec![K("conflicts"), I(i)], "a cell cannot conflict with itself"));
            }
        }
        Ok(())
    }

    fn check_flows(&self) -> Result<(), Invalid> {
        let mut names = BTreeSet::new();
        for (i, f) in self.flows.iter().enumerate() {
            let p = |k| vec![K("flow"), I(i), K(k)];
            if !names.insert(f.name.as_str()) {
                return Err(bad(p("name"), format!("duplicate flow name {:?}", f.name)));
            }
            let (sfu_end, key) = match (f.src.as_str(), f.dst.as_str()) {
                ("wan", d) => (d, "dst"),
                (s, "wan") => (s, "src"),
                _ => return Err(bad(p("src"), "one end of a flow must be \"wan\"")),
            };
            let Some(node) = self.node_by_name(sfu_end) else {
                return Err(bad(p(key), format!("unknown SFU {sfu_end:?}")));
            };
            let stations = self.sfus.iter().find(|s| s.node() == node).map_or(0, |s| s.stations);
            if f.sta >= stations {
                return Err(bad(p("sta"), format!("{sfu_end} has {stations} station(s); sta {} out of range", f.sta)));
            }
            if f.priority > 7 {
                return Err(bad(p("priority"), "priority must be in 0..=7"));
            }
            if f.size_bytes == 0 || f.size_bytes > 60_000 {
                return Err(bad(p("size_bytes"), "size_bytes must be in 1..=60000"));
            }
            if let Some(stop) = f.stop_ms {
                if stop <= f.start_ms {
                    return Err(bad(p("stop_ms"), "stop_ms must be after start_ms"));
                }
            }
            let ok = match f.arrival {
                Arrival::Constant { rate_bps } => rate_bps > 0,
                Arrival::OnOff { rate_bps, on_ms, off_ms, .. } => rate_bps > 0 && on_ms > 0 && off_ms > 0,
                Arrival::Batch { count, every_ms } => count > 0 && every_ms != Some(0),
            };
            if !ok {
                return Err(bad(p("arrival"), "arrival rates, periods and counts must be positive"));
            }
        }
        Ok(())
    }

    fn check_events(&self) -> Result<(), Invalid> {
        for (i, e) in self.events.iter().enumerate() {
            let p = |k| vec![K("event"), I(i), K(k)];
            match &e.action {
                Action::KillSfu { sfu } | Action::RecoverSfu { sfu } => {
                    if self.node_by_name(sfu).is_none() {
                        return Err(bad(p("sfu"), format!("unknown SFU {sfu:?}")));
                    }
                }
                Action::ProvisioningStorm { count, .. } => {
                    if *count == 0 {
                        return Err(bad(p("count"), "storm count must be positive"));
                    }
                }
                Action::FiberCut | Action::FiberRestore | Action::OverlapSlots => {}
            }
        }
        Ok(())
    }
}

/// 1-based line and column of byte offset `at`.
fn line_col(src: &str, at: usize) -> (usize, usize) {
    let at = at.min(src.len());
    let before = &src[..at];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(at, |nl| at - nl - 1) + 1;
    (line, col)
}

/// Span of the deepest existing item along `path`.
fn locate(src: &str, path: &[Seg]) -> Option<Range<usize>> {
    let doc = toml_edit::ImDocument::parse(src.to_string()).ok()?;
    let mut item = doc.as_item();
    let mut best = None;
    for seg in path {
        let next = match seg {
            Seg::Key(k) => {
                if let Some(t) = item.as_table_like() {
                    if let Some(span) = t.get_key_value(k).and_then(|(key, _)| key.span()) {
                        best = Some(span);
                    }
                }
                item.get(*k)
            }
            Seg::Index(i) => item.get(*i),
        };
        match next {
            Some(n) => {
                item = n;
                if let Some(s) = n.span() {
                    best = Some(s);
                }
            }
            None => break,
        }
    }
    best
}
