//! Structural validation of emitted schedules, independent of the code that
//! produced them.

use thiserror::Error;

use super::AirGrant;
use crate::frames::{Tamap, TamapError};
use crate::links::InterferenceGraph;
use crate::sim::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleViolation {
    #[error("grants to conflicting cells {a} and {b} overlap")]
    GrantOverlap { a: NodeId, b: NodeId },
    #[error("TAMap invalid: {0}")]
    Tamap(#[from] TamapError),
    #[error("TAMap entries {0} and {1} closer than the guard time")]
    Guard(usize, usize),
    #[error("TAMap uses {used} ns of a {cycle} ns cycle")]
    Overfull { used: u64, cycle: u64 },
}

/// Every pair of grants to the same or conflicting cells must be disjoint.
pub fn check_grants(grants: &[AirGrant], graph: &InterferenceGraph) -> Result<(), ScheduleViolation> {
    for (i, a) in grants.iter().enumerate() {
        for b in &grants[i + 1..] {
            let related = a.sfu == b.sfu || graph.conflicts(a.sfu, b.sfu);
            if related && a.start < b.end() && b.start < a.end() && a.max_duration_ns > 0 && b.max_duration_ns > 0 {
                return Err(ScheduleViolation::GrantOverlap { a: a.sfu, b: b.sfu });
            }
        }
    }
    Ok(())
}

/// Structural map checks plus guard spacing and the cycle budget
/// (durations + guards <= cycle).
pub fn check_tamap(tamap: &Tamap, guard_ns: u64) -> Result<(), ScheduleViolation> {
    tamap.validate()?;
    let mut order: Vec<usize> = (0..tamap.entries.len()).collect();
    order.sort_by_key(|&i| tamap.entries[i].offset_ns);
    for w in order.windows(2) {
        let (a, b) = (&tamap.entries[w[0]], &tamap.entries[w[1]]);
        if a.end_ns() + guard_ns > b.offset_ns as u64 {
            return Err(ScheduleViolation::Guard(w[0], w[1]));
        }
    }
    let used: u64 = tamap.entries.iter().map(|e| e.duration_ns as u64 + guard_ns).sum();
    if !tamap.entries.is_empty() && used > tamap.cycle_len_ns as u64 {
        return Err(ScheduleViolation::Overfull { used, cycle: tamap.cycle_len_ns as u64 });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::GrantReason;
    use crate::sim::SimTime;

    #[test]
    fn detects_overlap_only_between_conflicting_cells() {
        let g = InterferenceGraph::new([NodeId(1), NodeId(2), NodeId(3)], &[(NodeId(1), NodeId(2))]).unwrap();
        let grant = |s, start| AirGrant { sfu: NodeId(s), start: SimTime(start), max_duration_ns: 100, reason: GrantReason::Downlink };
        assert!(check_grants(&[grant(1, 0), grant(3, 50)], &g).is_ok());
        assert!(check_grants(&[grant(1, 0), grant(2, 100)], &g).is_ok());
        assert!(check_grants(&[grant(1, 0), grant(2, 99)], &g).is_err());
    }
}
