use std::collections::{BTreeMap, BTreeSet};

use super::{Ctrl, DownItem, Ev, FrameRx, GrantMsg, Packet, Params, Sched, UpContent, UpRx, World};
use crate::energy::PowerState;
use crate::frames::{
    build_pcs_frame, parse_pcs_frame, pcs_header_len, pma_decode, pma_encode, pma_encoded_len, pma_max_payload, Mpdu,
    PloamKind, PloamMsg, ServiceClass, Tamap, WireLen, MGMT_TAG,
};
use crate::management::AlarmKind;
use crate::network::Direction;
use crate::scheduling::{
    check_grants, check_tamap, needed_airtime, relay_buffer_bytes, sequence_grants, AirGrant, GrantDemand,
    GrantReason, RuAllocation,
};
use crate::sim::{NodeId, SimTime};

impl World {
    /// Make sure a downstream cycle runs at the first cycle boundary at or
    /// after `now`.
    pub(crate) fn ensure_cycle(&mut self, sc: &mut Sched, now: SimTime) {
        if self.in_cycle {
            return;
        }
        let c = self.p.cycle;
        let mut t = SimTime(now.0.div_ceil(c) * c);
        if let Some(last) = self.last_cycle.filter(|&l| l >= t) {
            t = last + c;
        }
        if let Some((id, at)) = self.cycle_ev {
            if at <= t {
                return;
            }
            sc.cancel(id);
        }
        let id = sc.schedule(t, NodeId::MFU, Ev::DownCycle);
        self.cycle_ev = Some((id, t));
    }

    fn busy(&self) -> bool {
        !self.llc.is_empty()
            || !self.ploams.is_empty()
            || !self.wake_pending.is_empty()
            || self.dba.has_work()
            || self.window.in_flight() > 0
            || self.window.queued() > 0
            || !self.polls.is_empty()
    }

    fn next_arrival(&self) -> Option<SimTime> {
        self.flows
            .iter()
            .filter_map(|f| f.peek().map(|t| if f.dir == Direction::Down { t + self.p.mfu_proc } else { t }))
            .min()
    }

    pub(crate) fn down_cycle(&mut self, sc: &mut Sched) {
        let g = sc.now();
        self.cycle_ev = None;
        self.last_cycle = Some(g);
        self.in_cycle = true;
        self.ingest(sc, g);
        if self.link_up {
            self.transmit_frame(sc, g);
        }
        self.in_cycle = false;
        let c = self.p.cycle;
        let next = if self.busy() {
            Some(g + c)
        } else {
            self.next_arrival().map(|t| SimTime(t.0.div_ceil(c) * c).max(g + c))
        };
        if let Some(t) = next {
            let id = sc.schedule(t, NodeId::MFU, Ev::DownCycle);
            self.cycle_ev = Some((id, t));
        }
    }

    /// Admit every arrival due by `g`: downstream packets into the LLC,
    /// upstream packets at their stations.
    fn ingest(&mut self, sc: &mut Sched, g: SimTime) {
        let proc = self.p.mfu_proc;
        let mut down = false;
        for i in 0..self.flows.len() {
            loop {
                let f = &mut self.flows[i];
                let Some(t) = f.peek() else { break };
                let ready = if f.dir == Direction::Down { t + proc } else { t };
                if ready > g {
                    break;
                }
                let pkt = Packet {
                    id: self.next_pkt,
                    flow: f.id,
                    sfu: f.sfu,
                    sta: f.sta,
                    bytes: f.size,
                    class: f.class,
                    priority: f.priority,
                    tag: f.tag,
                    created: t,
                    ready,
                };
                let dir = f.dir;
                f.advance();
                self.next_pkt += 1;
                self.stats[i].offered += 1;
                match dir {
                    Direction::Down => {
                        down = true;
                        self.mfu_ingress(sc, pkt);
                    }
                    Direction::Up => self.sta_arrival(sc, pkt),
                }
            }
        }
        if down {
            self.touch_mfu(sc, g);
        }
    }

    /// Queue a downstream packet, or hold it while its SFU sleeps.
    pub(crate) fn mfu_ingress(&mut self, sc: &mut Sched, pkt: Packet) {
        let s = pkt.sfu;
        let held = match self.view[&s] {
            PowerState::LightSleep | PowerState::DeepSleep => true,
            PowerState::RfOff => pkt.class != ServiceClass::Iot,
            _ => false,
        };
        if !held {
            self.llc.push(pkt.tag, DownItem::Data(pkt));
            return;
        }
        let now = sc.now();
        if let Some(old) = self.sleep_buf.get_mut(&s).expect("known SFU").push(pkt) {
            self.stats[old.flow as usize].sleep_dropped += 1;
            self.drop_pkt(&old);
            self.alarms.raise(now, s, AlarmKind::BufferOverflow);
        }
        self.wake_pending.insert(s);
        self.ensure_cycle(sc, now);
    }

    /// The OMCI slot goes to an SFU owing a response, transaction or recent
    /// poll, least recently served first; it rotates when nothing is owed.
    fn omci_owner(&mut self, now: SimTime) -> NodeId {
        let timeout = self.scenario.management.omci_timeout_ns;
        let owed: BTreeSet<NodeId> = self
            .window
            .outstanding()
            .map(|w| w.sfu)
            .chain(self.polls.iter().filter(|(_, &t)| t + timeout > now).map(|(&s, _)| s))
            .collect();
        let s = match owed.iter().min_by_key(|s| self.omci_served.get(s).copied()) {
            Some(&s) => s,
            None => {
                self.omci_rr = (self.omci_rr + 1) % self.sfus.len();
                *self.sfus.keys().nth(self.omci_rr).expect("at least one SFU")
            }
        };
        self.omci_served.insert(s, now);
        s
    }

    fn transmit_frame(&mut self, sc: &mut Sched, g: SimTime) {
        let mut ploams = std::mem::take(&mut self.ploams);
        for &s in &self.wake_pending {
            ploams.push(PloamMsg { kind: PloamKind::WakeCommand, target_sfu: s, arg: 0 });
        }
        ploams.truncate(u8::MAX as usize);
        let owner = self.omci_owner(g);
        let mut tamap = self.dba.generate_tamap(g + self.p.map_lead, owner);
        if self.force_overlap && tamap.entries.len() >= 3 {
            tamap.entries[2].offset_ns = tamap.entries[1].offset_ns;
            self.force_overlap = false;
        }
        if let Err(v) = check_tamap(&tamap, self.p.guard) {
            self.breach(format!("tamap_disjoint: cycle at {}: {v}", tamap.cycle_start));
        }
        if self.p.dump {
            for e in &tamap.entries {
                self.trace.schedule_lines.push(format!(
                    "tamap {} {} {} {} {} {}",
                    g.as_nanos(),
                    tamap.cycle_start.as_nanos(),
                    e.sfu,
                    e.offset_ns,
                    e.duration_ns,
                    e.tcont.0
                ));
            }
        }
        let header = pcs_header_len(ploams.len(), tamap.entries.len());
        let cap = pma_max_payload(self.optical.downstream.bytes_in(self.p.cycle));
        let items: Vec<DownItem> =
            self.drr.select(&mut self.llc, cap.saturating_sub(header)).into_iter().map(|(_, i)| i).collect();
        let mpdu_len: usize = items.iter().map(|i| i.wire_len()).sum();
        if self.p.wire_check {
            self.check_wire(&items, &ploams, &tamap, header + mpdu_len);
        }
        let tx = self.optical.downstream_send(g, pma_encoded_len(header + mpdu_len));
        let map_at = tx.start + self.optical.downstream.tx_time_ns(pma_encoded_len(header));
        for e in &tamap.entries {
            let at = tamap.cycle_start + e.offset_ns as u64;
            if map_at + self.optical.prop_delay(e.sfu) > at {
                self.breach(format!("map_lead: map for the slot of {} at {at} arrives late", e.sfu));
            }
            sc.schedule(at, e.sfu, Ev::UpSlot { cycle_start: tamap.cycle_start, entry: *e });
        }
        let mut per: BTreeMap<NodeId, FrameRx> = BTreeMap::new();
        for item in items {
            match item {
                DownItem::Data(p) => per.entry(p.sfu).or_default().pkts.push(p),
                DownItem::Omci { sfu, msg } => per.entry(sfu).or_default().omci.push(msg),
                DownItem::Grant(m) => per.entry(m.grant.sfu).or_default().grants.push(m),
            }
        }
        for pl in &ploams {
            if pl.target_sfu == NodeId::BROADCAST {
                for &s in self.sfus.keys() {
                    per.entry(s).or_default().ploams.push(*pl);
                }
            } else {
                per.entry(pl.target_sfu).or_default().ploams.push(*pl);
            }
        }
        for (s, at) in tx.deliveries {
            if let Some(rx) = per.remove(&s) {
                sc.schedule(at, s, Ev::FrameArrival(Box::new(rx)));
            }
        }
        if mpdu_len > 0 {
            self.touch_mfu(sc, g);
        }
    }

    /// Serialize the frame through every layer, parse it back and compare.
    fn check_wire(&mut self, items: &[DownItem], ploams: &[PloamMsg], tamap: &Tamap, len: usize) {
        let mut frames = Vec::with_capacity(items.len());
        for it in items {
            self.fem_seq = self.fem_seq.wrapping_add(1);
            match it.to_fem(self.fem_seq) {
                Ok(f) => frames.push(f),
                Err(e) => return self.breach(format!("wire_round_trip: FEM encode failed: {e}")),
            }
        }
        let pcs = match build_pcs_frame(Mpdu { frames }, ploams.to_vec(), tamap.clone()) {
            Ok(p) => p,
            Err(e) => return self.breach(format!("wire_round_trip: PCS build failed: {e}")),
        };
        let bytes = pcs.to_bytes();
        let ok = bytes.len() == len
            && pma_decode(&pma_encode(&bytes)).ok().as_deref() == Some(&bytes[..])
            && parse_pcs_frame(&bytes).is_ok_and(|back| {
                back.ploam == ploams
                    && back.tamap == *tamap
                    && back.payload.frames.len() == items.len()
                    && back
                        .payload
                        .frames
                        .iter()
                        .zip(items)
                        .all(|(f, it)| DownItem::from_fem(f).is_ok_and(|b| it.same_on_wire(&b)))
            });
        if ok {
            self.wire_checked += 1;
        } else {
            self.breach("wire_round_trip: downstream frame did not survive encode/decode".into());
        }
    }

    pub(crate) fn up_arrival(&mut self, sc: &mut Sched, rx: UpRx) {
        let now = sc.now();
        if self.optical.upstream_complete(&rx.burst).is_err() {
            if let UpContent::Data(pkts) | UpContent::Relay { done: pkts } = &rx.content {
                for p in pkts {
                    self.drop_pkt(p);
                }
            }
            return;
        }
        match rx.content {
            UpContent::Omci(msgs) => {
                for (m, ready) in msgs {
                    self.omci_up_max_ns = self.omci_up_max_ns.max(now - ready);
                    self.omci_up_count += 1;
                    self.omci_response(sc, rx.burst.sfu, m);
                }
            }
            UpContent::Data(pkts) | UpContent::Relay { done: pkts } => {
                let at = now + self.p.mfu_proc;
                if at <= self.p.horizon {
                    for p in &pkts {
                        self.deliver(p, at);
                    }
                    if !pkts.is_empty() {
                        self.touch_mfu(sc, now);
                    }
                }
            }
        }
    }

    pub(crate) fn ctrl(&mut self, sc: &mut Sched, c: Ctrl) {
        let now = sc.now();
        match c {
            Ctrl::Status(r) => self.board.receive(r),
            Ctrl::Request(req) => {
                self.dba.request(req);
                self.ensure_cycle(sc, now);
            }
            Ctrl::Power(s, state) => self.power_report(sc, s, state),
        }
    }

    /// One airtime scheduling round over the freshest status reports.
    pub(crate) fn grant_tick(&mut self, sc: &mut Sched) {
        let now = sc.now();
        let p = self.p.clone();
        sc.schedule(now + p.status_cycle, NodeId::MFU, Ev::GrantTick);
        if !self.link_up {
            return;
        }
        let base = now + p.grant_lead;
        self.outstanding.retain(|g| g.end() > now);
        let w = &p.wifi;
        let mut demands = Vec::new();
        let mut rus_by: BTreeMap<NodeId, Vec<RuAllocation>> = BTreeMap::new();
        let mut slot_by: BTreeMap<NodeId, u64> = BTreeMap::new();
        for r in self.board.fresh(now) {
            let s = r.sfu;
            if matches!(self.view[&s], PowerState::LightSleep | PowerState::DeepSleep) {
                continue;
            }
            let mine: Vec<&AirGrant> = self.outstanding.iter().filter(|g| g.sfu == s).collect();
            if mine.iter().any(|g| g.end() > base + p.status_cycle) {
                continue;
            }
            let promised: u64 = mine
                .iter()
                .filter(|g| g.reason == GrantReason::Downlink)
                .map(|g| w.payload_fitting(g.end().saturating_sub(g.start.max(r.timestamp)), 1) as u64)
                .sum();
            let up_pending = mine.iter().any(|g| g.reason == GrantReason::UplinkTrigger && g.end() > r.timestamp);
            let down = r.total_bytes().saturating_sub(promised);
            let up = if up_pending { 0 } else { r.uplink_bytes() };
            let reason = match (down > 0, up > 0) {
                (false, false) => continue,
                (true, false) => GrantReason::Downlink,
                (false, true) => GrantReason::UplinkTrigger,
                (true, true) => match self.last_reason.get(&s) {
                    Some(GrantReason::Downlink) => GrantReason::UplinkTrigger,
                    _ => GrantReason::Downlink,
                },
            };
            match reason {
                GrantReason::Downlink => {
                    let total = r.total_bytes().max(1);
                    let frames = (r.queued_frames * down).div_ceil(total).max(1);
                    demands.push(GrantDemand {
                        sfu: s,
                        priority: r.top_priority.unwrap_or(0),
                        bytes: down,
                        duration_ns: needed_airtime(w, down, frames).min(p.txop_max),
                        reason,
                    });
                }
                GrantReason::UplinkTrigger => {
                    let rus: Vec<RuAllocation> = r
                        .uplink_backlog
                        .iter()
                        .filter(|b| b.bytes > 0)
                        .map(|b| RuAllocation { sta: b.sta, ru_bytes: b.bytes })
                        .collect();
                    let frames: u64 = r.uplink_backlog.iter().map(|b| b.frames).sum();
                    let dur = w.airtime_ns(up as usize, frames as usize);
                    let slot = if p.relay() {
                        p.up_rate.tx_time_ns(relay_buffer_bytes(dur, p.sample_rate, p.bit_width) as usize)
                    } else {
                        p.framed.time_ns(p.up_rate, up + frames * super::DATA_ENCAP_LEN as u64)
                    };
                    slot_by.insert(s, slot);
                    rus_by.insert(s, rus);
                    demands.push(GrantDemand { sfu: s, priority: 0, bytes: up, duration_ns: dur, reason });
                }
            }
        }
        if demands.is_empty() {
            return;
        }
        let first_window = now.as_nanos() / p.cycle;
        self.anchor_cursor.retain(|&j, _| j >= first_window);
        let graph = self.air.graph().clone();
        let prior = self.outstanding.clone();
        let mut anchored = BTreeSet::new();
        let cursor = &mut self.anchor_cursor;
        let grants = sequence_grants(&demands, &graph, base, &prior, |d, start| {
            if d.reason != GrantReason::UplinkTrigger || !p.ofdma_coordination {
                return start;
            }
            match align_uplink(cursor, &p, start, d.duration_ns, slot_by[&d.sfu]) {
                Some(s) => {
                    anchored.insert(d.sfu);
                    s
                }
                None => start,
            }
        });
        let all: Vec<AirGrant> = prior.iter().chain(grants.iter()).copied().collect();
        if let Err(v) = check_grants(&all, &graph) {
            self.breach(format!("grant_disjoint: {v}"));
        }
        for g in grants {
            if p.dump {
                self.trace.schedule_lines.push(format!(
                    "grant {} {} {} {} {}",
                    now.as_nanos(),
                    g.sfu,
                    g.start.as_nanos(),
                    g.max_duration_ns,
                    match g.reason {
                        GrantReason::Downlink => "downlink",
                        GrantReason::UplinkTrigger => "uplink_trigger",
                    }
                ));
            }
            self.trace.grants.push(g);
            self.outstanding.push(g);
            self.last_reason.insert(g.sfu, g.reason);
            let rus = if g.reason == GrantReason::UplinkTrigger { rus_by.remove(&g.sfu).unwrap_or_default() } else { Vec::new() };
            let msg = GrantMsg { grant: g, anchored: anchored.contains(&g.sfu), rus };
            self.llc.push(MGMT_TAG, DownItem::Grant(msg));
        }
        self.ensure_cycle(sc, now);
    }
}

/// Start time for an uplink trigger round such that its data is ready at the
/// SFU exactly when a reserved upstream slot opens. Reserves the slot in the
/// per-window cursor map. `None` if no window within reach fits.
///
/// The round's anchored request leaves the SFU when the round starts and
/// must reach the MFU before the map for the window is built.
pub(crate) fn align_uplink(
    cursor: &mut BTreeMap<u64, u64>,
    p: &Params,
    start0: SimTime,
    dur: u64,
    slot: u64,
) -> Option<SimTime> {
    let (c, l) = (p.cycle, p.map_lead);
    let r0 = start0 + dur + p.sfu_proc;
    let first = (start0 + p.ctrl_up).as_nanos().div_ceil(c).max(r0.as_nanos().saturating_sub(l) / c);
    for j in first..first + 64 {
        let g = SimTime(j * c);
        let w = g + l;
        let cur = cursor.get(&j).copied().unwrap_or(p.omci_slot + p.guard);
        let pos = r0.max(w + cur);
        if pos + slot + p.guard <= w + c {
            let s = SimTime(pos.as_nanos() - dur - p.sfu_proc);
            if s + p.ctrl_up <= g {
                cursor.insert(j, pos - w + slot + p.guard);
                return Some(s);
            }
        }
    }
    None
}
