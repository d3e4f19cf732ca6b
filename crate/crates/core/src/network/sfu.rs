use super::{AirPkt, Ctrl, Ev, FrameRx, Packet, Sched, UpContent, UpRx, World};
use crate::energy::PowerState;
use crate::frames::{PloamKind, ServiceClass, TamapEntry, TcontId, FEM_HEADER_LEN, NUM_DATA_TAGS};
use crate::management::AlarmKind;
use crate::scheduling::{SfuStatusReport, StaBacklog};
use crate::sim::{NodeId, SimTime};

impl World {
    pub(crate) fn frame_arrival(&mut self, sc: &mut Sched, s: NodeId, rx: FrameRx) {
        let now = sc.now();
        let f = &self.sfus[&s];
        if !f.alive || f.state() == PowerState::DeepSleep {
            for p in &rx.pkts {
                self.drop_pkt(p);
            }
            return;
        }
        let t_listen = self.p.profile.timers.t_listen_ns;
        for pl in &rx.ploams {
            let f = &self.sfus[&s];
            match pl.kind {
                PloamKind::DeepSleepCommand if f.state() == PowerState::LightSleep && !f.waking => {
                    self.set_sfu_state(now, s, PowerState::DeepSleep);
                    sc.schedule(now + t_listen, s, Ev::ListenWindow);
                }
                PloamKind::WakeCommand if pl.target_sfu == s && f.state().is_sleeping() => self.start_wake(sc, s),
                _ => {}
            }
        }
        if self.sfus[&s].state() == PowerState::DeepSleep {
            for p in &rx.pkts {
                self.drop_pkt(p);
            }
            return;
        }
        let f = self.sfus.get_mut(&s).expect("known SFU");
        for m in &rx.omci {
            let resp = f.mib.apply(m);
            f.omci_up.push_back((resp, now));
        }
        for g in rx.grants {
            if g.grant.start < now {
                self.late_grants += 1;
            } else {
                sc.schedule(g.grant.start, s, Ev::GrantStart(Box::new(g)));
            }
        }
        if rx.pkts.is_empty() {
            return;
        }
        let st = self.sfus[&s].state();
        let wake = match st {
            PowerState::LightSleep => true,
            PowerState::RfOff => rx.pkts.iter().any(|p| p.class != ServiceClass::Iot),
            _ => false,
        };
        if wake {
            self.start_wake(sc, s);
        }
        if self.p.sfu_proc == 0 {
            self.sfu_ready(sc, s, rx.pkts);
        } else {
            sc.schedule(now + self.p.sfu_proc, s, Ev::SfuReady(rx.pkts));
        }
    }

    /// Downstream packets enter the SFU's Wi-Fi queues.
    pub(crate) fn sfu_ready(&mut self, sc: &mut Sched, s: NodeId, pkts: Vec<Packet>) {
        let limit = self.p.queue_limit as usize;
        let mut user = false;
        for p in pkts {
            let f = self.sfus.get_mut(&s).expect("known SFU");
            if !f.alive || f.wifi_q.queued_bytes() + p.bytes as usize > limit {
                self.drop_pkt(&p);
                continue;
            }
            user |= p.class != ServiceClass::Iot;
            f.wifi_q.push(p.air_tag(), AirPkt(p));
        }
        if user {
            self.sfu_touch(sc, s);
        }
        self.kick_air(sc, s);
    }

    /// An uplink packet appears at its station.
    pub(crate) fn sta_arrival(&mut self, sc: &mut Sched, p: Packet) {
        let s = p.sfu;
        let limit = self.p.queue_limit;
        let f = self.sfus.get_mut(&s).expect("known SFU");
        let sta = p.sta as usize;
        if !f.alive || sta >= f.sta_q.len() || f.sta_bytes + p.bytes as u64 > limit {
            self.drop_pkt(&p);
            return;
        }
        let iot = p.class == ServiceClass::Iot;
        f.sta_bytes += p.bytes as u64;
        f.sta_q[sta].push_back(p);
        if !iot {
            self.sfu_touch(sc, s);
        } else if matches!(f.state(), PowerState::LightSleep | PowerState::DeepSleep) {
            self.start_wake(sc, s);
        }
        self.kick_air(sc, s);
    }

    /// An upstream slot of `s` opens: send what is ready and fits.
    pub(crate) fn up_slot(&mut self, sc: &mut Sched, s: NodeId, cycle_start: SimTime, entry: TamapEntry) {
        let now = sc.now();
        if !self.link_up || !self.sfus[&s].alive {
            return;
        }
        let avail = (cycle_start + entry.end_ns()).as_nanos().saturating_sub(now.as_nanos());
        let rate = self.p.up_rate;
        let (timing, content, payload) = if entry.tcont == TcontId::OMCI {
            let timing = self.p.framed;
            let cap = timing.payload_fitting(rate, avail);
            let f = self.sfus.get_mut(&s).expect("known SFU");
            let mut used = 0u64;
            let mut msgs = Vec::new();
            while let Some((m, _)) = f.omci_up.front() {
                let len = (FEM_HEADER_LEN + 2 + m.serialized_len()) as u64;
                if used + len > cap {
                    break;
                }
                used += len;
                msgs.push(f.omci_up.pop_front().expect("non-empty"));
            }
            (timing, UpContent::Omci(msgs), used)
        } else if self.p.relay() {
            let timing = self.p.data_timing;
            let cap = timing.payload_fitting(rate, avail);
            let f = self.sfus.get_mut(&s).expect("known SFU");
            let mut used = 0u64;
            let mut done = Vec::new();
            while used < cap {
                let Some(c) = f.relay_q.front_mut() else { break };
                if c.ready > now {
                    break;
                }
                if !c.started {
                    c.started = true;
                    self.fwd.record(now - c.ready);
                }
                let n = c.left.min(cap - used);
                c.left -= n;
                used += n;
                f.relay.release(n);
                if c.left == 0 {
                    done.extend(f.relay_q.pop_front().expect("non-empty").pkts);
                }
            }
            (timing, UpContent::Relay { done }, used)
        } else {
            let timing = self.p.data_timing;
            let cap = timing.payload_fitting(rate, avail);
            let f = self.sfus.get_mut(&s).expect("known SFU");
            let mut used = 0u64;
            let mut pkts = Vec::new();
            while let Some(p) = f.up_q.front() {
                let len = p.fiber_len() as u64;
                if p.ready > now || used + len > cap {
                    break;
                }
                used += len;
                let p = f.up_q.pop_front().expect("non-empty");
                self.fwd.record(now - p.ready);
                pkts.push(p);
            }
            (timing, UpContent::Data(pkts), used)
        };
        if payload == 0 {
            return;
        }
        let len = timing.wire_bytes(payload);
        self.sfus.get_mut(&s).expect("known SFU").window.optical_bytes += len as u64;
        match self.optical.upstream_send(now, s, len, cycle_start, &entry) {
            Ok(burst) => {
                sc.schedule(burst.arrival, NodeId::MFU, Ev::UpArrival(Box::new(UpRx { burst, content })));
            }
            Err(_) => {
                self.alarms.raise(now, s, AlarmKind::SlotViolation);
                if let UpContent::Data(pkts) | UpContent::Relay { done: pkts } = &content {
                    for p in pkts {
                        self.drop_pkt(p);
                    }
                }
            }
        }
    }

    /// Periodic status report to the MFU scheduler.
    pub(crate) fn status_tick(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        sc.schedule(now + self.p.status_cycle, s, Ev::StatusTick);
        let f = &self.sfus[&s];
        if !self.link_up || !f.alive || matches!(f.state(), PowerState::LightSleep | PowerState::DeepSleep) {
            return;
        }
        let mut r = SfuStatusReport::empty(s, now);
        for tag in 0..NUM_DATA_TAGS {
            r.queued_bytes[tag as usize] = f.wifi_q.tag_bytes(tag) as u64;
        }
        r.queued_frames = f.wifi_q.len() as u64;
        r.top_priority = f.wifi_q.first_nonempty().map(|t| 7u8.saturating_sub(t));
        for (sta, q) in f.sta_q.iter().enumerate() {
            let mut b = StaBacklog { sta: sta as u32, bytes: 0, frames: 0 };
            for p in q {
                if b.frames > 0 && b.bytes + p.bytes as u64 > self.p.ru_max {
                    break;
                }
                b.bytes += p.bytes as u64;
                b.frames += 1;
            }
            if b.frames > 0 {
                r.uplink_backlog.push(b);
            }
        }
        r.active_users = r.uplink_backlog.len() as u32;
        sc.schedule(now + self.p.ctrl_up, NodeId::MFU, Ev::Ctrl(Box::new(Ctrl::Status(r))));
    }
}
