//! The simulated FTTR premises: one MFU, its SFUs and their Wi-Fi cells,
//! the fiber between them, the OLT management path and the FTTH shadow
//! gateway used for energy comparison.

mod air;
mod flows;
mod mfu;
mod mgmt;
mod power;
mod sfu;
mod wire;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

pub use flows::{AirPkt, Direction, FlowGen, Packet, DATA_ENCAP_LEN};
pub use wire::{decode_fmci, encode_fmci, DownItem, GrantMsg};

use crate::config::{Action, Scenario};
use crate::energy::{
    DeepSleepCoordinator, EnergyLedger, EnergyPolicy, NodeKind, PowerMachine, PowerProfile, PowerState, SleepBuffer,
};
use crate::frames::{
    OmciMessage, PloamMsg, ServiceClass, TagQueues, TamapEntry, DrrState, Routing,
};
use crate::links::{AirMedium, AirMode, Csma, InterferenceGraph, OpticalLink, Rate, TxToken, UpstreamBurst, WifiParams};
use crate::management::{AlarmLog, LivenessMonitor, MibStore, OmciAdapter, Olt, TransactionWindow};
use crate::metrics::{FlowStats, RunOutput};
use crate::scheduling::{
    AirGrant, BurstTiming, Dba, DbaConfig, GrantReason, RelayBuffer, SchedulerMode, SfuStatusReport, StatusBoard,
    UplinkBwRequest,
};
use crate::sim::{Event, EventId, EventKind, Handler, NodeId, RngStream, Scheduler, SimTime};

pub(crate) type Sched = Scheduler<Ev>;

/// Everything the simulated world reacts to.
#[derive(Debug, Clone)]
pub enum Ev {
    DownCycle,
    FrameArrival(Box<FrameRx>),
    SfuReady(Vec<Packet>),
    UpSlot { cycle_start: SimTime, entry: TamapEntry },
    UpArrival(Box<UpRx>),
    CsmaAttempt,
    AirEnd(TxToken),
    GrantStart(Box<GrantMsg>),
    Ctrl(Box<Ctrl>),
    StatusTick,
    GrantTick,
    OltToMfu(Vec<u8>),
    MfuToOlt(Vec<u8>),
    OmciTimeout,
    PollTick,
    ActivityTimer,
    IdleTimer(u64),
    WakeDone,
    ListenWindow,
    PolicyTick,
    Script(usize),
}

impl EventKind for Ev {
    fn kind(&self) -> &'static str {
        match self {
            Ev::DownCycle => "down_cycle",
            Ev::FrameArrival(_) => "frame_arrival",
            Ev::SfuReady(_) => "sfu_ready",
            Ev::UpSlot { .. } => "up_slot",
            Ev::UpArrival(_) => "up_arrival",
            Ev::CsmaAttempt => "csma_attempt",
            Ev::AirEnd(_) => "air_end",
            Ev::GrantStart(_) => "grant_start",
            Ev::Ctrl(_) => "ctrl",
            Ev::StatusTick => "status_tick",
            Ev::GrantTick => "grant_tick",
            Ev::OltToMfu(_) => "olt_to_mfu",
            Ev::MfuToOlt(_) => "mfu_to_olt",
            Ev::OmciTimeout => "omci_timeout",
            Ev::PollTick => "poll_tick",
            Ev::ActivityTimer => "activity_timer",
            Ev::IdleTimer(_) => "idle_timer",
            Ev::WakeDone => "wake_done",
            Ev::ListenWindow => "listen_window",
            Ev::PolicyTick => "policy_tick",
            Ev::Script(_) => "script",
        }
    }
}

/// What one downstream frame carries for one SFU.
#[derive(Debug, Clone, Default)]
pub struct FrameRx {
    pub pkts: Vec<Packet>,
    pub omci: Vec<OmciMessage>,
    pub grants: Vec<GrantMsg>,
    pub ploams: Vec<PloamMsg>,
}

#[derive(Debug, Clone)]
pub enum UpContent {
    Omci(Vec<(OmciMessage, SimTime)>),
    Data(Vec<Packet>),
    /// Baseband bytes; packets whose round finished with this burst.
    Relay { done: Vec<Packet> },
}

#[derive(Debug, Clone)]
pub struct UpRx {
    pub burst: UpstreamBurst,
    pub content: UpContent,
}

/// Control-plane messages from an SFU to the MFU over the fixed-latency
/// control uplink.
#[derive(Debug, Clone)]
pub enum Ctrl {
    Status(SfuStatusReport),
    Request(UplinkBwRequest),
    Power(NodeId, PowerState),
}

/// One OLT request of a provisioning storm, kept for replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OltRequest {
    pub at: SimTime,
    pub routing: Routing,
    pub class: u16,
    pub instance: u16,
    pub content: Vec<u8>,
}

/// Derived timing and sizing constants of a run.
#[derive(Debug, Clone)]
pub struct Params {
    pub mode: SchedulerMode,
    pub horizon: SimTime,
    pub cycle: u64,
    pub guard: u64,
    pub omci_slot: u64,
    pub map_lead: u64,
    pub ctrl_up: u64,
    pub mfu_proc: u64,
    pub sfu_proc: u64,
    pub wifi: WifiParams,
    pub queue_limit: u64,
    pub status_cycle: u64,
    pub txop_max: u64,
    pub grant_lead: u64,
    pub ofdma_coordination: bool,
    pub ru_max: u64,
    pub framed: BurstTiming,
    pub data_timing: BurstTiming,
    pub up_rate: Rate,
    pub sample_rate: u64,
    pub bit_width: u32,
    pub savings: bool,
    pub profile: PowerProfile,
    pub wire_check: bool,
    pub dump: bool,
}

impl Params {
    pub fn relay(&self) -> bool {
        self.mode == SchedulerMode::PhyRelay
    }
}

/// Activity-driven Active/Idle tracking shared by every device.
#[derive(Debug, Clone)]
pub struct Activity {
    pub machine: PowerMachine,
    pub last: SimTime,
    pub timer: bool,
}

impl Activity {
    fn new() -> Self {
        Activity { machine: PowerMachine::new(PowerState::Active), last: SimTime::ZERO, timer: true }
    }
}

/// A transmission on the air.
#[derive(Debug, Clone)]
pub struct AirTx {
    pub down: Vec<Packet>,
    pub up: Vec<Packet>,
    pub dur: u64,
    pub bytes: usize,
    pub mode: AirMode,
    pub anchored: bool,
}

#[derive(Debug, Clone)]
pub struct ActiveGrant {
    pub msg: GrantMsg,
    pub end: SimTime,
    pub started: bool,
}

#[derive(Debug, Clone)]
pub struct RelayChunk {
    pub bytes: u64,
    pub left: u64,
    pub ready: SimTime,
    pub started: bool,
    pub pkts: Vec<Packet>,
}

/// Traffic seen by an SFU during the current policy window.
#[derive(Debug, Clone, Default)]
pub struct WindowCounters {
    pub bytes: u64,
    pub user: bool,
    pub services: BTreeSet<ServiceClass>,
    pub optical_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct Sfu {
    pub id: NodeId,
    pub stations: u32,
    pub iot_resident: bool,
    pub alive: bool,
    pub power: Activity,
    pub waking: bool,
    pub idle_gen: u64,
    pub policy: EnergyPolicy,
    pub wifi_q: TagQueues<AirPkt>,
    pub sta_q: Vec<VecDeque<Packet>>,
    pub sta_bytes: u64,
    pub up_q: VecDeque<Packet>,
    pub relay_q: VecDeque<RelayChunk>,
    pub relay: RelayBuffer,
    pub omci_up: VecDeque<(OmciMessage, SimTime)>,
    pub mib: MibStore,
    pub csma: Csma,
    pub csma_ev: Option<EventId>,
    pub retry: Option<AirTx>,
    pub prefer_up: bool,
    pub on_air: Option<(TxToken, AirTx)>,
    pub grant: Option<ActiveGrant>,
    pub rng: RngStream,
    pub window: WindowCounters,
}

impl Sfu {
    pub fn state(&self) -> PowerState {
        self.power.machine.state()
    }
}

/// Forwarding delay of uplink data queued at SFUs for an upstream slot.
#[derive(Debug, Clone, Copy, Default)]
pub struct FwdStats {
    pub count: u64,
    pub zero: u64,
    pub max_ns: u64,
    pub sum_ns: u128,
}

impl FwdStats {
    pub fn record(&mut self, ns: u64) {
        self.count += 1;
        if ns == 0 {
            self.zero += 1;
        }
        self.max_ns = self.max_ns.max(ns);
        self.sum_ns += ns as u128;
    }
}

/// Raw records kept for oracles and reports.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub olt_requests: Vec<OltRequest>,
    pub power_reports: Vec<(SimTime, NodeId, PowerState)>,
    pub deep_sleep_commands: Vec<SimTime>,
    pub grants: Vec<AirGrant>,
    pub schedule_lines: Vec<String>,
}

pub struct World {
    pub p: Params,
    pub scenario: Scenario,
    pub optical: OpticalLink,
    pub air: AirMedium,
    pub dba: Dba,
    pub llc: TagQueues<DownItem>,
    pub drr: DrrState,
    pub fem_seq: u16,
    pub cycle_ev: Option<(EventId, SimTime)>,
    pub in_cycle: bool,
    pub last_cycle: Option<SimTime>,
    pub flows: Vec<FlowGen>,
    pub stats: Vec<FlowStats>,
    pub next_pkt: u64,
    pub sfus: BTreeMap<NodeId, Sfu>,
    pub board: StatusBoard,
    pub outstanding: Vec<AirGrant>,
    pub last_reason: BTreeMap<NodeId, GrantReason>,
    pub anchor_cursor: BTreeMap<u64, u64>,
    pub ploams: Vec<PloamMsg>,
    pub olt: Olt,
    pub olt_rng: RngStream,
    pub adapter: OmciAdapter,
    pub window: TransactionWindow<()>,
    /// Send time of the unanswered liveness poll per SFU.
    pub polls: BTreeMap<NodeId, SimTime>,
    pub liveness: LivenessMonitor,
    pub alarms: AlarmLog,
    pub omci_rr: usize,
    /// Last cycle each SFU held the OMCI slot.
    pub omci_served: BTreeMap<NodeId, SimTime>,
    pub poll_seq: u16,
    pub omci_timeouts: u64,
    pub omci_up_max_ns: u64,
    pub omci_up_count: u64,
    pub link_up: bool,
    pub force_overlap: bool,
    pub ledger: EnergyLedger,
    pub mfu_power: Activity,
    pub gw_power: Activity,
    pub coordinator: DeepSleepCoordinator,
    pub sleep_buf: BTreeMap<NodeId, SleepBuffer<Packet>>,
    pub view: BTreeMap<NodeId, PowerState>,
    pub wake_pending: BTreeSet<NodeId>,
    pub fwd: FwdStats,
    pub late_grants: u64,
    pub wire_checked: u64,
    pub breaches: Vec<String>,
    pub trace: Trace,
}

impl World {
    pub fn new(sc: &Scenario) -> World {
        let mode = sc.scheduler_mode();
        let horizon = SimTime(sc.horizon_ns());
        let (mfu_proc, sfu_proc) = sc.scheduler.latencies.for_mode(mode);
        let up_rate = Rate(sc.optical.upstream_bps);
        let framed = BurstTiming::Framed { overhead_bytes: sc.optical.burst_overhead_bytes };
        let data_timing = if mode == SchedulerMode::PhyRelay { BurstTiming::Raw } else { framed };
        let p = Params {
            mode,
            horizon,
            cycle: sc.optical.cycle_ns,
            guard: sc.optical.guard_ns,
            omci_slot: sc.optical.omci_slot_ns,
            map_lead: sc.optical.map_lead_ns,
            ctrl_up: sc.optical.ctrl_up_ns,
            mfu_proc,
            sfu_proc,
            wifi: sc.wifi.params(),
            queue_limit: sc.wifi.queue_limit_bytes,
            status_cycle: sc.scheduler.status_cycle_ns,
            txop_max: sc.scheduler.txop_max_ns,
            grant_lead: sc.scheduler.grant_lead_ns,
            ofdma_coordination: sc.scheduler.ofdma_coordination,
            ru_max: sc.scheduler.ru_max_bytes,
            framed,
            data_timing,
            up_rate,
            sample_rate: sc.relay.sample_rate_hz,
            bit_width: sc.relay.bit_width,
            savings: sc.energy.savings,
            profile: sc.energy.profile,
            wire_check: sc.optical.wire_check,
            dump: sc.scheduler.dump,
        };

        let nodes = sc.sfu_nodes();
        let edges: Vec<(NodeId, NodeId)> = sc
            .conflicts
            .iter()
            .map(|[a, b]| (sc.node_by_name(a).expect("validated"), sc.node_by_name(b).expect("validated")))
            .collect();
        let graph = InterferenceGraph::new(nodes.iter().copied(), &edges).expect("validated conflict graph");
        let mut optical = OpticalLink::new(Rate(sc.optical.downstream_bps), up_rate);
        let mut adapter = OmciAdapter::new(sc.management.port_id);
        let mut ledger = EnergyLedger::new();
        ledger.add_node(NodeId::MFU, NodeKind::Mfu, PowerState::Active);
        ledger.add_node(NodeId::GATEWAY, NodeKind::Gateway, PowerState::Active);
        let mut sfus = BTreeMap::new();
        for c in &sc.sfus {
            let id = c.node();
            optical.attach(id, c.prop_delay_ns);
            adapter.register(c.omci_id.unwrap_or(c.id as u8), id);
            ledger.add_node(id, NodeKind::Sfu, PowerState::Active);
            sfus.insert(
                id,
                Sfu {
                    id,
                    stations: c.stations,
                    iot_resident: c.iot_resident,
                    alive: true,
                    power: Activity::new(),
                    waking: false,
                    idle_gen: 0,
                    policy: EnergyPolicy::LightSleepPolicy,
                    wifi_q: TagQueues::new(),
                    sta_q: vec![VecDeque::new(); c.stations as usize],
                    sta_bytes: 0,
                    up_q: VecDeque::new(),
                    relay_q: VecDeque::new(),
                    relay: RelayBuffer::new(sc.relay.buffer_bytes),
                    omci_up: VecDeque::new(),
                    mib: MibStore::new(id),
                    csma: Csma::new(&p.wifi),
                    csma_ev: None,
                    retry: None,
                    prefer_up: false,
                    on_air: None,
                    grant: None,
                    rng: RngStream::new(sc.seed, 0x100 + id.0 as u64),
                    window: WindowCounters::default(),
                },
            );
        }
        let mut flows = Vec::new();
        for (i, f) in sc.flows.iter().enumerate() {
            let (dir, sfu) = if f.src == "wan" {
                (Direction::Down, sc.node_by_name(&f.dst).expect("validated"))
            } else {
                (Direction::Up, sc.node_by_name(&f.src).expect("validated"))
            };
            flows.push(FlowGen::new(i as u32, f, dir, sfu, sc.seed, horizon));
        }
        let stats = flows.iter().map(|f| FlowStats::new(&f.name, f.dir, f.sfu)).collect();
        let dba = Dba::new(DbaConfig {
            cycle_ns: p.cycle,
            guard_ns: p.guard,
            omci_slot_ns: p.omci_slot,
            min_slot_ns: sc.optical.min_slot_ns,
            upstream: up_rate,
            timing: data_timing,
        });
        World {
            optical,
            air: AirMedium::new(graph),
            dba,
            llc: TagQueues::new(),
            drr: DrrState::default_weights(),
            fem_seq: 0,
            cycle_ev: None,
            in_cycle: false,
            last_cycle: None,
            flows,
            stats,
            next_pkt: 0,
            board: StatusBoard::new(p.status_cycle),
            outstanding: Vec::new(),
            last_reason: BTreeMap::new(),
            anchor_cursor: BTreeMap::new(),
            ploams: Vec::new(),
            olt: Olt::new(),
            olt_rng: RngStream::new(sc.seed, 0x10),
            adapter,
            window: TransactionWindow::new(sc.management.omci_window),
            polls: BTreeMap::new(),
            liveness: LivenessMonitor::new(sc.management.k_miss, nodes.iter().copied()),
            alarms: AlarmLog::new(),
            omci_rr: 0,
            omci_served: BTreeMap::new(),
            poll_seq: 0,
            omci_timeouts: 0,
            omci_up_max_ns: 0,
            omci_up_count: 0,
            link_up: true,
            force_overlap: false,
            ledger,
            mfu_power: Activity::new(),
            gw_power: Activity::new(),
            coordinator: DeepSleepCoordinator::new(nodes.iter().copied()),
            sleep_buf: nodes.iter().map(|&n| (n, SleepBuffer::new(sc.energy.sleep_buffer_frames))).collect(),
            view: nodes.iter().map(|&n| (n, PowerState::Active)).collect(),
            wake_pending: BTreeSet::new(),
            fwd: FwdStats::default(),
            late_grants: 0,
            wire_checked: 0,
            breaches: Vec::new(),
            trace: Trace::default(),
            sfus,
            p,
            scenario: sc.clone(),
        }
    }

    fn prime(&mut self, sc: &mut Sched) {
        let t_act = self.p.profile.timers.t_act_idle_ns;
        sc.schedule(SimTime(t_act), NodeId::MFU, Ev::ActivityTimer);
        sc.schedule(SimTime(t_act), NodeId::GATEWAY, Ev::ActivityTimer);
        for &s in self.sfus.keys() {
            sc.schedule(SimTime(t_act), s, Ev::ActivityTimer);
            if self.p.mode.is_coordinated() {
                sc.schedule(SimTime(self.p.status_cycle), s, Ev::StatusTick);
            }
        }
        if self.p.mode.is_coordinated() {
            sc.schedule(SimTime(self.p.status_cycle + self.p.ctrl_up + 1_000), NodeId::MFU, Ev::GrantTick);
        }
        if self.scenario.management.liveness {
            sc.schedule(SimTime(self.scenario.management.poll_interval_ns), NodeId::MFU, Ev::PollTick);
        }
        if self.p.savings {
            sc.schedule(SimTime(self.scenario.energy.thresholds.window_ns), NodeId::MFU, Ev::PolicyTick);
        }
        for (i, e) in self.scenario.events.iter().enumerate() {
            sc.schedule(SimTime::from_millis(e.at_ms), NodeId::OLT, Ev::Script(i));
        }
        self.ensure_cycle(sc, SimTime::ZERO);
    }

    fn script(&mut self, sc: &mut Sched, i: usize) {
        let now = sc.now();
        let action = self.scenario.events[i].action.clone();
        match action {
            Action::KillSfu { sfu } => {
                let s = self.scenario.node_by_name(&sfu).expect("validated");
                self.sfus.get_mut(&s).expect("known").alive = false;
            }
            Action::RecoverSfu { sfu } => {
                let s = self.scenario.node_by_name(&sfu).expect("validated");
                self.sfus.get_mut(&s).expect("known").alive = true;
                self.kick_air(sc, s);
            }
            Action::FiberCut => self.fiber_cut(now),
            Action::FiberRestore => {
                self.fiber_restore(now);
                self.ensure_cycle(sc, now);
            }
            Action::ProvisioningStorm { count, unknown_targets } => self.provisioning_storm(sc, count, unknown_targets),
            Action::OverlapSlots => self.force_overlap = true,
        }
    }

    pub(crate) fn breach(&mut self, what: String) {
        if self.breaches.len() < 100 {
            self.breaches.push(what);
        }
    }

    /// Run to the horizon and collect results.
    pub fn run(mut self) -> RunOutput {
        let mut sc: Sched = Scheduler::new();
        self.prime(&mut sc);
        let horizon = self.p.horizon;
        let digest = sc.run_until(horizon, &mut self);
        let events = sc.final_stats();
        crate::metrics::collect(self, digest, events)
    }
}

impl Handler<Ev> for World {
    fn handle(&mut self, sc: &mut Sched, ev: Event<Ev>) {
        let node = ev.target;
        match ev.payload {
            Ev::DownCycle => self.down_cycle(sc),
            Ev::FrameArrival(rx) => self.frame_arrival(sc, node, *rx),
            Ev::SfuReady(pkts) => self.sfu_ready(sc, node, pkts),
            Ev::UpSlot { cycle_start, entry } => self.up_slot(sc, node, cycle_start, entry),
            Ev::UpArrival(rx) => self.up_arrival(sc, *rx),
            Ev::CsmaAttempt => self.csma_attempt(sc, node),
            Ev::AirEnd(token) => self.air_end(sc, node, token),
            Ev::GrantStart(msg) => self.grant_start(sc, node, *msg),
            Ev::Ctrl(c) => self.ctrl(sc, *c),
            Ev::StatusTick => self.status_tick(sc, node),
            Ev::GrantTick => self.grant_tick(sc),
            Ev::OltToMfu(wire) => self.olt_to_mfu(sc, wire),
            Ev::MfuToOlt(wire) => self.olt.receive(sc.now(), &wire),
            Ev::OmciTimeout => self.omci_timeout(sc),
            Ev::PollTick => self.poll_tick(sc),
            Ev::ActivityTimer => self.activity_timer(sc, node),
            Ev::IdleTimer(gen) => self.idle_timer(sc, node, gen),
            Ev::WakeDone => self.wake_done(sc, node),
            Ev::ListenWindow => self.listen_window(sc, node),
            Ev::PolicyTick => self.policy_tick(sc),
            Ev::Script(i) => self.script(sc, i),
        }
    }
}

/// Run a scenario to completion.
pub fn simulate(sc: &Scenario) -> RunOutput {
    World::new(sc).run()
}
