use super::{ActiveGrant, AirPkt, AirTx, Ctrl, Ev, GrantMsg, Packet, RelayChunk, Sched, World};
use crate::energy::PowerState;
use crate::frames::{ServiceClass, TcontId};
use crate::links::{AirMode, TxOutcome, TxToken};
use crate::management::AlarmKind;
use crate::scheduling::{relay_buffer_bytes, GrantReason, RuAllocation, UplinkBwRequest};
use crate::sim::NodeId;

impl World {
    /// Whether the SFU's radio may serve its cell right now.
    fn radio_on(&self, s: NodeId) -> bool {
        let f = &self.sfus[&s];
        f.alive
            && match f.state() {
                PowerState::Active | PowerState::Idle | PowerState::ReducedTx => true,
                PowerState::RfOff => !f.waking,
                PowerState::LightSleep | PowerState::DeepSleep => false,
            }
    }

    fn has_air_work(&self, s: NodeId) -> bool {
        let f = &self.sfus[&s];
        f.retry.is_some() || !f.wifi_q.is_empty() || f.sta_bytes > 0
    }

    /// New work or a freed medium: contend (baseline) or use the grant.
    pub(crate) fn kick_air(&mut self, sc: &mut Sched, s: NodeId) {
        if self.p.mode.is_coordinated() {
            let f = &self.sfus[&s];
            if f.grant.is_some() && f.on_air.is_none() {
                self.run_grant(sc, s);
            }
        } else {
            self.contend(sc, s);
        }
    }

    fn contend(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        {
            let f = &self.sfus[&s];
            if f.on_air.is_some() || f.csma.attempt_at().is_some() {
                return;
            }
        }
        if !self.radio_on(s) || !self.has_air_work(s) || self.air.busy_for(s, now) {
            return;
        }
        let params = self.p.wifi;
        let f = self.sfus.get_mut(&s).expect("known SFU");
        let at = f.csma.arm(now, &params, &mut f.rng);
        f.csma_ev = Some(sc.schedule(at, s, Ev::CsmaAttempt));
    }

    pub(crate) fn csma_attempt(&mut self, sc: &mut Sched, s: NodeId) {
        let f = self.sfus.get_mut(&s).expect("known SFU");
        f.csma_ev = None;
        f.csma.fire();
        if !self.radio_on(s) {
            return;
        }
        let f = self.sfus.get_mut(&s).expect("known SFU");
        let tx = match f.retry.take() {
            Some(tx) => Some(tx),
            None => self.contended_tx(s),
        };
        match tx {
            Some(tx) => self.begin_tx(sc, s, tx),
            None => self.contend(sc, s),
        }
    }

    /// Take the next contended transmission: a downlink aggregate or an
    /// uplink trigger round, alternating when both have work.
    fn contended_tx(&mut self, s: NodeId) -> Option<AirTx> {
        let w = self.p.wifi;
        let ru_max = self.p.ru_max;
        let f = self.sfus.get_mut(&s).expect("known SFU");
        let has_down = !f.wifi_q.is_empty();
        let has_up = f.sta_bytes > 0;
        let up = has_up && (!has_down || f.prefer_up);
        if !has_down && !has_up {
            return None;
        }
        f.prefer_up = !up;
        if up {
            let rus: Vec<RuAllocation> =
                (0..f.sta_q.len() as u32).map(|sta| RuAllocation { sta, ru_bytes: ru_max }).collect();
            let pkts = take_rus(f, &rus);
            let bytes: usize = pkts.iter().map(|p| p.bytes as usize).sum();
            Some(AirTx {
                dur: w.airtime_ns(bytes, pkts.len()),
                bytes,
                down: Vec::new(),
                up: pkts,
                mode: AirMode::Contended,
                anchored: false,
            })
        } else {
            let mut pkts = Vec::new();
            let mut bytes = 0usize;
            while let Some(tag) = f.wifi_q.first_nonempty() {
                let next = f.wifi_q.queue(tag).front().expect("non-empty").0.bytes as usize;
                if !pkts.is_empty() && bytes + next > w.max_aggregate_bytes {
                    break;
                }
                pkts.push(f.wifi_q.pop_front(tag).expect("non-empty").0);
                bytes += next;
            }
            Some(AirTx {
                dur: w.airtime_ns(bytes, pkts.len()),
                bytes,
                down: pkts,
                up: Vec::new(),
                mode: AirMode::Contended,
                anchored: false,
            })
        }
    }

    fn begin_tx(&mut self, sc: &mut Sched, s: NodeId, tx: AirTx) {
        let now = sc.now();
        let params = self.p.wifi;
        let token = self.air.begin(now, s, tx.dur, tx.bytes, tx.mode);
        let neighbors: Vec<NodeId> = self.air.graph().neighbors(s).collect();
        for n in neighbors {
            let f = self.sfus.get_mut(&n).expect("known SFU");
            if f.csma.attempt_at().is_some() && f.csma.freeze(now, &params) {
                if let Some(id) = f.csma_ev.take() {
                    sc.cancel(id);
                }
            }
        }
        sc.schedule(now + tx.dur, s, Ev::AirEnd(token));
        self.sfus.get_mut(&s).expect("known SFU").on_air = Some((token, tx));
    }

    pub(crate) fn air_end(&mut self, sc: &mut Sched, s: NodeId, token: TxToken) {
        let now = sc.now();
        let params = self.p.wifi;
        let outcome = self.air.end(s, token);
        let f = self.sfus.get_mut(&s).expect("known SFU");
        let (_, tx) = f.on_air.take().expect("transmission on air");
        let coordinated = self.p.mode.is_coordinated();
        match outcome {
            TxOutcome::Success { .. } => {
                if !coordinated {
                    f.csma.on_success(&params);
                }
                let user = tx.down.iter().chain(&tx.up).any(|p| p.class != ServiceClass::Iot);
                f.window.bytes += tx.bytes as u64;
                f.window.user |= user;
                f.window.services.extend(tx.down.iter().chain(&tx.up).map(|p| p.class));
                for p in &tx.down {
                    self.deliver(p, now);
                }
                if !tx.up.is_empty() {
                    self.uplink_received(sc, s, tx.up, tx.dur, tx.anchored);
                }
                if user {
                    self.sfu_touch(sc, s);
                }
            }
            TxOutcome::Collision => {
                if coordinated {
                    requeue(f, tx);
                } else if f.csma.on_collision(&params) {
                    f.retry = Some(tx);
                } else {
                    for p in tx.down.iter().chain(&tx.up) {
                        self.drop_pkt(p);
                    }
                }
            }
        }
        if coordinated {
            let f = self.sfus.get_mut(&s).expect("known SFU");
            if f.grant.as_ref().is_some_and(|g| g.msg.grant.reason == GrantReason::UplinkTrigger) {
                f.grant = None;
            }
            self.kick_air(sc, s);
        } else {
            self.contend(sc, s);
            let neighbors: Vec<NodeId> = self.air.graph().neighbors(s).collect();
            for n in neighbors {
                self.contend(sc, n);
            }
        }
    }

    /// Uplink packets are at the SFU; they become ready for the fiber after
    /// SFU processing.
    fn uplink_received(&mut self, sc: &mut Sched, s: NodeId, mut pkts: Vec<Packet>, air_ns: u64, anchored: bool) {
        let now = sc.now();
        let ready = now + self.p.sfu_proc;
        for p in pkts.iter_mut() {
            p.ready = ready;
        }
        let relay = self.p.relay();
        let (sample_rate, bit_width, ctrl_up) = (self.p.sample_rate, self.p.bit_width, self.p.ctrl_up);
        let f = self.sfus.get_mut(&s).expect("known SFU");
        let bytes = if relay {
            let bytes = relay_buffer_bytes(air_ns, sample_rate, bit_width);
            if !f.relay.admit(bytes) {
                self.alarms.raise(now, s, AlarmKind::BufferOverflow);
                for p in &pkts {
                    self.drop_pkt(p);
                }
                return;
            }
            f.relay_q.push_back(RelayChunk { bytes, left: bytes, ready, started: false, pkts });
            bytes
        } else {
            let bytes = pkts.iter().map(|p| p.fiber_len() as u64).sum();
            f.up_q.extend(pkts);
            bytes
        };
        if !anchored {
            let req = UplinkBwRequest { sfu: s, bytes_expected: bytes, tcont: TcontId::data(s), ready_at: None };
            sc.schedule(ready + ctrl_up, NodeId::MFU, Ev::Ctrl(Box::new(Ctrl::Request(req))));
        }
    }

    pub(crate) fn grant_start(&mut self, sc: &mut Sched, s: NodeId, msg: GrantMsg) {
        if !self.radio_on(s) {
            return;
        }
        let end = msg.grant.end();
        self.sfus.get_mut(&s).expect("known SFU").grant = Some(ActiveGrant { msg, end, started: false });
        if self.sfus[&s].on_air.is_none() {
            self.run_grant(sc, s);
        }
    }

    /// Use the active grant: the trigger round, or the next downlink
    /// aggregate that fits the time left.
    pub(crate) fn run_grant(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        let w = self.p.wifi;
        let relay = self.p.relay();
        let (sample_rate, bit_width, ctrl_up, proc) = (self.p.sample_rate, self.p.bit_width, self.p.ctrl_up, self.p.sfu_proc);
        let f = self.sfus.get_mut(&s).expect("known SFU");
        let Some(g) = f.grant.as_mut() else { return };
        if now >= g.end {
            f.grant = None;
            return;
        }
        let tx = match g.msg.grant.reason {
            GrantReason::UplinkTrigger => {
                let dur = g.msg.grant.max_duration_ns;
                if g.started || now + dur > g.end {
                    f.grant = None;
                    return;
                }
                g.started = true;
                let anchored = g.msg.anchored;
                let rus = g.msg.rus.clone();
                let pkts = take_rus(f, &rus);
                if pkts.is_empty() {
                    f.grant = None;
                    return;
                }
                let bytes: usize = pkts.iter().map(|p| p.bytes as usize).sum();
                if anchored {
                    let up_bytes = if relay {
                        relay_buffer_bytes(dur, sample_rate, bit_width)
                    } else {
                        pkts.iter().map(|p| p.fiber_len() as u64).sum()
                    };
                    let req = UplinkBwRequest {
                        sfu: s,
                        bytes_expected: up_bytes,
                        tcont: TcontId::data(s),
                        ready_at: Some(now + dur + proc),
                    };
                    sc.schedule(now + ctrl_up, NodeId::MFU, Ev::Ctrl(Box::new(Ctrl::Request(req))));
                }
                // The trigger frame is padded so the round fills the grant.
                AirTx { dur, bytes, down: Vec::new(), up: pkts, mode: AirMode::Granted, anchored }
            }
            GrantReason::Downlink => {
                let left = g.end - now;
                let mut pkts = Vec::new();
                let mut bytes = 0usize;
                while let Some(tag) = f.wifi_q.first_nonempty() {
                    let next = f.wifi_q.queue(tag).front().expect("non-empty").0.bytes as usize;
                    if bytes + next > w.max_aggregate_bytes || w.airtime_ns(bytes + next, pkts.len() + 1) > left {
                        break;
                    }
                    pkts.push(f.wifi_q.pop_front(tag).expect("non-empty").0);
                    bytes += next;
                }
                if pkts.is_empty() {
                    if f.wifi_q.is_empty() {
                        return;
                    }
                    f.grant = None;
                    return;
                }
                AirTx {
                    dur: w.airtime_ns(bytes, pkts.len()),
                    bytes,
                    down: pkts,
                    up: Vec::new(),
                    mode: AirMode::Granted,
                    anchored: false,
                }
            }
        };
        self.begin_tx(sc, s, tx);
    }
}

/// Pull whole packets from each station's queue up to its RU size.
fn take_rus(f: &mut super::Sfu, rus: &[RuAllocation]) -> Vec<Packet> {
    let mut out = Vec::new();
    for ru in rus {
        let Some(q) = f.sta_q.get_mut(ru.sta as usize) else { continue };
        let mut used = 0u64;
        while let Some(p) = q.front() {
            if used > 0 && used + p.bytes as u64 > ru.ru_bytes {
                break;
            }
            used += p.bytes as u64;
            f.sta_bytes -= p.bytes as u64;
            out.push(q.pop_front().expect("non-empty"));
        }
    }
    out
}

/// Put a failed granted transmission back for a later grant.
fn requeue(f: &mut super::Sfu, tx: AirTx) {
    for p in tx.down {
        f.wifi_q.push(p.air_tag(), AirPkt(p));
    }
    for p in tx.up.into_iter().rev() {
        f.sta_bytes += p.bytes as u64;
        f.sta_q[p.sta as usize].push_front(p);
    }
}
