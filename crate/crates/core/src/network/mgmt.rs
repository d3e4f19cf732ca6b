use super::{DownItem, Ev, OltRequest, Sched, World};
use crate::frames::{encode_omci, MsgType, OmciHeader, OmciMessage, Routing, MGMT_TAG};
use crate::management::{AlarmKind, EntityClass, LivenessEvent};
use crate::sim::{NodeId, SimTime};

/// Transaction ids with the top bit set belong to MFU liveness polls.
pub const POLL_TID_FLAG: u16 = 0x8000;

impl World {
    /// An extended OMCI request from the OLT reaches the adapter.
    pub(crate) fn olt_to_mfu(&mut self, sc: &mut Sched, wire: Vec<u8>) {
        let now = sc.now();
        match self.adapter.route_downstream(&wire) {
            Ok((sfu, msg)) => {
                self.window.enqueue(sfu, msg, ());
                self.pump_window(sc);
            }
            Err(_) => {
                if let Some(resp) = self.adapter.error_response(&wire) {
                    let back = encode_omci(&resp).expect("response fits");
                    sc.schedule(now + self.scenario.management.olt_latency_ns, NodeId::OLT, Ev::MfuToOlt(back));
                }
            }
        }
    }

    /// Release queued transactions into the LLC while the window has room.
    fn pump_window(&mut self, sc: &mut Sched) {
        let now = sc.now();
        let mut sent = false;
        while let Some((sfu, msg)) = self.window.next_ready(now) {
            self.llc.push(MGMT_TAG, DownItem::Omci { sfu, msg });
            sent = true;
        }
        if sent {
            sc.schedule(now + self.scenario.management.omci_timeout_ns, NodeId::MFU, Ev::OmciTimeout);
            self.ensure_cycle(sc, now);
        }
    }

    pub(crate) fn omci_timeout(&mut self, sc: &mut Sched) {
        let now = sc.now();
        let deadline = SimTime(now.as_nanos().saturating_sub(self.scenario.management.omci_timeout_ns));
        self.omci_timeouts += self.window.expire(deadline).len() as u64;
        self.polls.retain(|_, t| *t > deadline);
        self.pump_window(sc);
    }

    /// A standard OMCI response from `sfu` has reached the MFU.
    pub(crate) fn omci_response(&mut self, sc: &mut Sched, sfu: NodeId, msg: OmciMessage) {
        let now = sc.now();
        let tid = msg.header.transaction_id;
        if tid & POLL_TID_FLAG != 0 {
            self.polls.remove(&sfu);
            if self.liveness.response(sfu) == Some(LivenessEvent::Clear) {
                self.alarms.clear(now, sfu, AlarmKind::Unresponsive);
            }
            return;
        }
        self.window.complete(sfu, tid);
        if let Ok(ext) = self.adapter.route_upstream(sfu, &msg) {
            let wire = encode_omci(&ext).expect("response fits");
            sc.schedule(now + self.scenario.management.olt_latency_ns, NodeId::OLT, Ev::MfuToOlt(wire));
        }
        self.pump_window(sc);
    }

    /// Liveness round: judge the previous poll of every SFU and send a new
    /// one. Polls bypass the transaction window.
    pub(crate) fn poll_tick(&mut self, sc: &mut Sched) {
        let now = sc.now();
        sc.schedule(now + self.scenario.management.poll_interval_ns, NodeId::MFU, Ev::PollTick);
        let sfus: Vec<NodeId> = self.sfus.keys().copied().collect();
        let mut sent = false;
        for s in sfus {
            let (send, ev) = self.liveness.poll_due(s);
            if ev == Some(LivenessEvent::Raise) {
                self.alarms.raise(now, s, AlarmKind::Unresponsive);
            }
            if !send || !self.link_up {
                continue;
            }
            self.poll_seq = (self.poll_seq + 1) & !POLL_TID_FLAG;
            let msg = OmciMessage {
                header: OmciHeader {
                    transaction_id: POLL_TID_FLAG | self.poll_seq,
                    msg_type: MsgType::Get.request(),
                    device_flags: 0,
                    entity_class: EntityClass::DeviceInfo.code(),
                    entity_instance: 0,
                },
                content: Vec::new(),
                routing: None,
            };
            self.llc.push(MGMT_TAG, DownItem::Omci { sfu: s, msg });
            self.polls.insert(s, now);
            sent = true;
        }
        if sent {
            sc.schedule(now + self.scenario.management.omci_timeout_ns, NodeId::MFU, Ev::OmciTimeout);
            self.ensure_cycle(sc, now);
        }
    }

    /// Random Set requests from the OLT across every registered SFU plus
    /// `unknown` routing ids with nothing behind them.
    pub(crate) fn provisioning_storm(&mut self, sc: &mut Sched, count: u32, unknown: u8) {
        let now = sc.now();
        let mut targets: Vec<Routing> = self.sfus.keys().filter_map(|&s| self.adapter.routing_for(s)).collect();
        let port = self.adapter.port;
        let mut id = 0xFFu8;
        while targets.len() < self.sfus.len() + unknown as usize {
            let r = Routing { mfu_port_id: port, sfu_id: id };
            if !targets.contains(&r) {
                targets.push(r);
            }
            id -= 1;
        }
        let at = now + self.scenario.management.olt_latency_ns;
        for _ in 0..count {
            let routing = targets[self.olt_rng.uniform_inclusive(targets.len() as u32 - 1) as usize];
            let class = EntityClass::ALL[self.olt_rng.uniform_inclusive(EntityClass::ALL.len() as u32 - 1) as usize].code();
            let len = 1 + self.olt_rng.uniform_inclusive(7) as usize;
            let content: Vec<u8> = (0..len).map(|_| self.olt_rng.uniform_inclusive(255) as u8).collect();
            let wire = self.olt.request(now, routing, MsgType::Set, class, 0, content.clone());
            self.trace.olt_requests.push(OltRequest { at: now, routing, class, instance: 0, content });
            sc.schedule(at, NodeId::MFU, Ev::OltToMfu(wire));
        }
    }

    pub(crate) fn fiber_cut(&mut self, now: SimTime) {
        self.link_up = false;
        let sfus: Vec<NodeId> = self.sfus.keys().copied().collect();
        for s in sfus {
            self.alarms.raise(now, s, AlarmKind::LinkDown);
            self.liveness.set_exempt(s, true);
        }
    }

    pub(crate) fn fiber_restore(&mut self, now: SimTime) {
        self.link_up = true;
        let sfus: Vec<NodeId> = self.sfus.keys().copied().collect();
        for s in sfus {
            self.alarms.clear(now, s, AlarmKind::LinkDown);
            if !self.view[&s].is_sleeping() {
                self.liveness.set_exempt(s, false);
            }
        }
    }
}
