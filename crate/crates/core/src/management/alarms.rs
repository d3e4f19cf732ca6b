use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlarmKind {
    LinkDown,
    Unresponsive,
    SlotViolation,
    BufferOverflow,
}

impl AlarmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlarmKind::LinkDown => "link_down",
            AlarmKind::Unresponsive => "unresponsive",
            AlarmKind::SlotViolation => "slot_violation",
            AlarmKind::BufferOverflow => "buffer_overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alarm {
    pub source: NodeId,
    pub kind: AlarmKind,
    pub raised_at: SimTime,
    pub cleared_at: Option<SimTime>,
}

/// All alarms of a run. At most one alarm per (source, kind) is active.
#[derive(Debug, Clone, Default)]
pub struct AlarmLog {
    alarms: Vec<Alarm>,
    active: BTreeMap<(NodeId, AlarmKind), usize>,
}

impl AlarmLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the same alarm is already active.
    pub fn raise(&mut self, now: SimTime, source: NodeId, kind: AlarmKind) -> bool {
        if self.active.contains_key(&(source, kind)) {
            return false;
        }
        self.active.insert((source, kind), self.alarms.len());
        self.alarms.push(Alarm { source, kind, raised_at: now, cleared_at: None });
        true
    }

    pub fn clear(&mut self, now: SimTime, source: NodeId, kind: AlarmKind) -> bool {
        match self.active.remove(&(source, kind)) {
            Some(i) => {
                self.alarms[i].cleared_at = Some(now);
                true
            }
            None => false,
        }
    }

    pub fn is_active(&self, source: NodeId, kind: AlarmKind) -> bool {
        self.active.contains_key(&(source, kind))
    }

    pub fn alarms(&self) -> &[Alarm] {
        &self.alarms
    }

    pub fn count(&self, kind: AlarmKind) -> usize {
        self.alarms.iter().filter(|a| a.kind == kind).count()
    }

    /// One line per raise or clear, in time order:
    /// `<time_ns> <source> <kind> raised|cleared`.
    pub fn lines(&self) -> Vec<String> {
        let mut ev: Vec<(SimTime, usize, bool)> = Vec::new();
        for (i, a) in self.alarms.iter().enumerate() {
            ev.push((a.raised_at, i, false));
            if let Some(c) = a.cleared_at {
                ev.push((c, i, true));
            }
        }
        ev.sort();
        ev.into_iter()
            .map(|(t, i, cleared)| {
                let a = &self.alarms[i];
                format!("{} {} {} {}", t.as_nanos(), a.source, a.kind.name(), if cleared { "cleared" } else { "raised" })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raise_clear_and_log_format() {
        let mut l = AlarmLog::new();
        assert!(l.raise(SimTime(7), NodeId(2), AlarmKind::Unresponsive));
        assert!(!l.raise(SimTime(8), NodeId(2), AlarmKind::Unresponsive));
        assert!(l.clear(SimTime(9), NodeId(2), AlarmKind::Unresponsive));
        assert!(!l.clear(SimTime(9), NodeId(2), AlarmKind::Unresponsive));
        assert_eq!(l.lines(), vec!["7 sfu2 unresponsive raised", "9 sfu2 unresponsive cleared"]);
        let a = &l.alarms()[0];
        assert!(a.cleared_at.unwrap() >= a.raised_at);
    }
}
