use super::{Activity, Ctrl, DownItem, Ev, Sched, World};
use crate::energy::{classify_load, select_policy, EnergyPolicy, LoadClass, PowerState, ScenarioFeatures};
use crate::frames::{PloamKind, PloamMsg};
use crate::management::AlarmKind;
use crate::sim::{NodeId, SimTime};

fn reduced(policy: EnergyPolicy) -> bool {
    matches!(policy, EnergyPolicy::TxPowerAdjust | EnergyPolicy::OpticalRateAdaptation)
}

impl World {
    fn activity(&mut self, node: NodeId) -> &mut Activity {
        match node {
            NodeId::MFU => &mut self.mfu_power,
            NodeId::GATEWAY => &mut self.gw_power,
            s => &mut self.sfus.get_mut(&s).expect("known SFU").power,
        }
    }

    /// Move `node` to `to` in both its state machine and the ledger.
    pub(crate) fn set_state(&mut self, now: SimTime, node: NodeId, to: PowerState) {
        if let Err(e) = self.activity(node).machine.go(now, to) {
            return self.breach(format!("power_transition: {node}: {e}"));
        }
        if let Err(e) = self.ledger.transition(node, now, to) {
            self.breach(format!("ledger_partition: {e}"));
        }
    }

    pub(crate) fn set_sfu_state(&mut self, now: SimTime, s: NodeId, to: PowerState) {
        self.set_state(now, s, to);
    }

    fn arm_activity(&mut self, sc: &mut Sched, node: NodeId) {
        let t_act = self.p.profile.timers.t_act_idle_ns;
        let a = self.activity(node);
        if !a.timer {
            a.timer = true;
            let at = a.last + t_act;
            sc.schedule(at, node, Ev::ActivityTimer);
        }
    }

    /// Traffic through the MFU; the FTTH gateway it stands in for sees the
    /// same traffic.
    pub(crate) fn touch_mfu(&mut self, sc: &mut Sched, now: SimTime) {
        for node in [NodeId::MFU, NodeId::GATEWAY] {
            let a = self.activity(node);
            a.last = a.last.max(now);
            if a.machine.state() == PowerState::Idle {
                self.set_state(now, node, PowerState::Active);
            }
            self.arm_activity(sc, node);
        }
    }

    /// User traffic at an SFU.
    pub(crate) fn sfu_touch(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        let savings = self.p.savings;
        let f = self.sfus.get_mut(&s).expect("known SFU");
        f.power.last = now;
        f.idle_gen += 1;
        match f.state() {
            PowerState::Idle => {
                let to = if savings && reduced(f.policy) { PowerState::ReducedTx } else { PowerState::Active };
                self.set_sfu_state(now, s, to);
            }
            PowerState::LightSleep | PowerState::DeepSleep | PowerState::RfOff => self.start_wake(sc, s),
            PowerState::Active | PowerState::ReducedTx => {}
        }
        self.arm_activity(sc, s);
    }

    /// Whether an SFU still holds traffic in any queue.
    fn sfu_busy(&self, s: NodeId) -> bool {
        let f = &self.sfus[&s];
        f.on_air.is_some()
            || f.retry.is_some()
            || !f.wifi_q.is_empty()
            || f.sta_bytes > 0
            || !f.up_q.is_empty()
            || !f.relay_q.is_empty()
            || !f.omci_up.is_empty()
    }

    pub(crate) fn activity_timer(&mut self, sc: &mut Sched, node: NodeId) {
        let now = sc.now();
        let t_act = self.p.profile.timers.t_act_idle_ns;
        let sfu = node != NodeId::MFU && node != NodeId::GATEWAY;
        let busy = sfu && self.sfu_busy(node);
        let a = self.activity(node);
        let due = a.last + t_act;
        if due > now || busy {
            let at = due.max(now + if busy { t_act } else { 0 });
            sc.schedule(at, node, Ev::ActivityTimer);
            return;
        }
        a.timer = false;
        if a.machine.state().is_active() {
            self.set_state(now, node, PowerState::Idle);
        }
        if sfu && self.p.savings && self.sfus[&node].state() == PowerState::Idle {
            self.arm_idle(sc, node);
        }
    }

    fn arm_idle(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        let t = self.p.profile.timers.t_idle_sleep_ns;
        let f = self.sfus.get_mut(&s).expect("known SFU");
        f.idle_gen += 1;
        sc.schedule(now + t, s, Ev::IdleTimer(f.idle_gen));
    }

    fn predicted_load(&self, now: SimTime) -> Option<LoadClass> {
        let ms = now.as_nanos() / 1_000_000;
        self.scenario.energy.predicted_load.iter().find(|p| p.from_ms <= ms && ms < p.to_ms).map(|p| p.load)
    }

    /// Idle long enough: enter the sleep state the policy allows.
    pub(crate) fn idle_timer(&mut self, sc: &mut Sched, s: NodeId, gen: u64) {
        let now = sc.now();
        let f = &self.sfus[&s];
        if gen != f.idle_gen || f.state() != PowerState::Idle || f.waking {
            return;
        }
        let hold = f.policy == EnergyPolicy::GlobalPolicySwitching
            && self.predicted_load(now).is_some_and(|l| l >= LoadClass::Moderate);
        if hold || !f.alive || self.sfu_busy(s) {
            self.arm_idle(sc, s);
            return;
        }
        let to = if f.policy == EnergyPolicy::RfOff || f.iot_resident { PowerState::RfOff } else { PowerState::LightSleep };
        self.set_sfu_state(now, s, to);
        sc.schedule(now + self.p.ctrl_up, NodeId::MFU, Ev::Ctrl(Box::new(Ctrl::Power(s, to))));
    }

    pub(crate) fn start_wake(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        let timers = self.p.profile.timers;
        let f = self.sfus.get_mut(&s).expect("known SFU");
        if f.waking || !f.alive {
            return;
        }
        let latency = match f.state() {
            PowerState::DeepSleep => timers.wake_deep_ns,
            PowerState::LightSleep | PowerState::RfOff => timers.wake_light_ns,
            _ => return,
        };
        f.waking = true;
        sc.schedule(now + latency, s, Ev::WakeDone);
    }

    pub(crate) fn wake_done(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        self.sfus.get_mut(&s).expect("known SFU").waking = false;
        if !self.sfus[&s].state().is_sleeping() {
            return;
        }
        self.set_sfu_state(now, s, PowerState::Idle);
        sc.schedule(now + self.p.ctrl_up, NodeId::MFU, Ev::Ctrl(Box::new(Ctrl::Power(s, PowerState::Idle))));
        let recent = now < self.sfus[&s].power.last + self.p.profile.timers.t_act_idle_ns;
        if self.sfu_busy(s) || recent {
            self.sfu_touch(sc, s);
        } else if self.p.savings {
            self.arm_idle(sc, s);
        }
        self.kick_air(sc, s);
    }

    /// Periodic receiver window of a deep-sleeping SFU: wake if the MFU is
    /// holding traffic for it.
    pub(crate) fn listen_window(&mut self, sc: &mut Sched, s: NodeId) {
        let now = sc.now();
        let f = &self.sfus[&s];
        if f.state() != PowerState::DeepSleep || f.waking {
            return;
        }
        if f.alive && self.wake_pending.contains(&s) {
            self.start_wake(sc, s);
        } else {
            sc.schedule(now + self.p.profile.timers.t_listen_ns, s, Ev::ListenWindow);
        }
    }

    /// A power report from an SFU reaches the MFU.
    pub(crate) fn power_report(&mut self, sc: &mut Sched, s: NodeId, state: PowerState) {
        let now = sc.now();
        self.view.insert(s, state);
        self.coordinator.report(s, state);
        self.trace.power_reports.push((now, s, state));
        let asleep = matches!(state, PowerState::LightSleep | PowerState::DeepSleep);
        if self.link_up {
            self.liveness.set_exempt(s, asleep);
        }
        if !state.is_sleeping() {
            self.wake_pending.remove(&s);
            let held = self.sleep_buf.get_mut(&s).expect("known SFU").flush();
            for p in held {
                self.llc.push(p.tag, DownItem::Data(p));
            }
            self.alarms.clear(now, s, AlarmKind::BufferOverflow);
            self.ensure_cycle(sc, now);
        }
        if self.p.savings && self.coordinator.poll() {
            self.ploams.push(PloamMsg { kind: PloamKind::DeepSleepCommand, target_sfu: NodeId::BROADCAST, arg: 0 });
            self.trace.deep_sleep_commands.push(now);
            for v in self.view.values_mut() {
                if *v == PowerState::LightSleep {
                    *v = PowerState::DeepSleep;
                }
            }
            self.ensure_cycle(sc, now);
        }
    }

    /// Re-select each SFU's policy from the traffic of the last window.
    pub(crate) fn policy_tick(&mut self, sc: &mut Sched) {
        let now = sc.now();
        let th = self.scenario.energy.thresholds;
        sc.schedule(now + th.window_ns, NodeId::MFU, Ev::PolicyTick);
        let predicted = self.predicted_load(now);
        let sfus: Vec<NodeId> = self.sfus.keys().copied().collect();
        for s in sfus {
            let f = self.sfus.get_mut(&s).expect("known SFU");
            let w = std::mem::take(&mut f.window);
            let features = ScenarioFeatures {
                load: classify_load(w.bytes, th.window_ns, &th),
                services: w.services,
                user_activity: w.user,
                idle_ns: now - f.power.last,
                iot_resident: f.iot_resident,
                optical_idle: w.optical_bytes == 0,
                predicted_load: predicted,
            };
            f.policy = select_policy(&features, &th);
            let want_reduced = reduced(f.policy);
            match f.state() {
                PowerState::Active if want_reduced => self.set_sfu_state(now, s, PowerState::ReducedTx),
                PowerState::ReducedTx if !want_reduced => self.set_sfu_state(now, s, PowerState::Active),
                _ => {}
            }
        }
    }
}
