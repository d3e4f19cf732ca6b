use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PowerProfile, PowerState, Watts};
use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Mfu,
    Sfu,
    Gateway,
}

impl NodeKind {
    pub fn watts(self, p: &PowerProfile) -> &Watts {
        match self {
            NodeKind::Mfu => &p.mfu,
            NodeKind::Sfu => &p.sfu,
            NodeKind::Gateway => &p.gateway,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub state: PowerState,
    pub enter: SimTime,
    pub exit: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("{node}: gap or overlap at {at} ns")]
    Discontinuity { node: NodeId, at: u64 },
    #[error("{node}: intervals end at {end} ns, horizon is {horizon} ns")]
    Coverage { node: NodeId, end: u64, horizon: u64 },
    #[error("{node}: transition at {at} ns precedes the open interval")]
    Backwards { node: NodeId, at: u64 },
}

#[derive(Debug, Clone)]
struct NodeLedger {
    kind: NodeKind,
    closed: Vec<Interval>,
    open: (PowerState, SimTime),
}

/// State residency history per node.
#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    nodes: BTreeMap<NodeId, NodeLedger>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: NodeId, kind: NodeKind, initial: PowerState) {
        self.nodes.insert(node, NodeLedger { kind, closed: Vec::new(), open: (initial, SimTime::ZERO) });
    }

    pub fn state(&self, node: NodeId) -> Option<PowerState> {
        self.nodes.get(&node).map(|n| n.open.0)
    }

    pub fn transition(&mut self, node: NodeId, now: SimTime, to: PowerState) -> Result<(), LedgerError> {
        let n = self.nodes.get_mut(&node).expect("node registered in ledger");
        let (state, since) = n.open;
        if now < since {
            return Err(LedgerError::Backwards { node, at: now.as_nanos() });
        }
        if state == to {
            return Ok(());
        }
        if now > since {
            n.closed.push(Interval { state, enter: since, exit: now });
        }
        n.open = (to, now);
        Ok(())
    }

    /// Close every open interval at `horizon`.
    pub fn finish(&mut self, horizon: SimTime) {
        for n in self.nodes.values_mut() {
            let (state, since) = n.open;
            if horizon > since {
                n.closed.push(Interval { state, enter: since, exit: horizon });
            }
            n.open = (state, horizon);
        }
    }

    pub fn intervals(&self, node: NodeId) -> &[Interval] {
        self.nodes.get(&node).map(|n| n.closed.as_slice()).unwrap_or(&[])
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeKind)> + '_ {
        self.nodes.iter().map(|(&id, n)| (id, n.kind))
    }

    /// Intervals of every node tile `[0, horizon]` with no gap or overlap.
    pub fn check_partition(&self, horizon: SimTime) -> Result<(), LedgerError> {
        for (&node, n) in &self.nodes {
            let mut t = SimTime::ZERO;
            for iv in &n.closed {
                if iv.enter != t || iv.exit <= iv.enter {
                    return Err(LedgerError::Discontinuity { node, at: iv.enter.as_nanos() });
                }
                t = iv.exit;
            }
            if t != horizon {
                return Err(LedgerError::Coverage { node, end: t.as_nanos(), horizon: horizon.as_nanos() });
            }
        }
        Ok(())
    }

    pub fn residency(&self, node: NodeId) -> BTreeMap<PowerState, u64> {
        let mut r = BTreeMap::new();
        for iv in self.intervals(node) {
            *r.entry(iv.state).or_insert(0) += iv.exit - iv.enter;
        }
        r
    }

    /// Joules over closed intervals: sum of duration times watts.
    pub fn joules(&self, node: NodeId, profile: &PowerProfile) -> f64 {
        let Some(n) = self.nodes.get(&node) else { return 0.0 };
        let w = n.kind.watts(profile);
        // Summed per state so the result is a short exact-order sum.
        self.residency(node).into_iter().map(|(s, ns)| ns as f64 * w.of(s) / 1e9).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEnergy {
    pub node: String,
    pub kind: NodeKind,
    pub joules: f64,
    pub residency_ns: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub nodes: Vec<NodeEnergy>,
    pub fttr_joules: f64,
    pub ftth_joules: f64,
    pub fttr_ftth_ratio: f64,
}

/// Close the ledger at `horizon`, verify it, and total FTTR (MFU + SFUs)
/// against the shadow FTTH gateway.
pub fn account_energy(ledger: &mut EnergyLedger, horizon: SimTime, profile: &PowerProfile) -> Result<EnergyReport, LedgerError> {
    ledger.finish(horizon);
    ledger.check_partition(horizon)?;
    let mut nodes = Vec::new();
    let (mut fttr, mut ftth) = (0.0, 0.0);
    for (id, kind) in ledger.nodes().collect::<Vec<_>>() {
        let j = ledger.joules(id, profile);
        match kind {
            NodeKind::Gateway => ftth += j,
            _ => fttr += j,
        }
        nodes.push(NodeEnergy {
            node: id.to_string(),
            kind,
            joules: j,
            residency_ns: ledger.residency(id).into_iter().map(|(s, ns)| (s.name().to_string(), ns)).collect(),
        });
    }
    let ratio = if ftth > 0.0 { fttr / ftth } else { 0.0 };
    Ok(EnergyReport { nodes, fttr_joules: fttr, ftth_joules: ftth, fttr_ftth_ratio: ratio })
}
