use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::sim::NodeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("cell {0} cannot conflict with itself")]
    SelfLoop(NodeId),
}

/// Undirected co-channel conflict edges between Wi-Fi cells.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterferenceGraph {
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl InterferenceGraph {
    pub fn new(cells: impl IntoIterator<Item = NodeId>, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = cells.into_iter().map(|c| (c, BTreeSet::new())).collect();
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
        Ok(InterferenceGraph { adj })
    }

    pub fn conflicts(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn neighbors(&self, a: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.get(&a).into_iter().flat_map(|n| n.iter().copied())
    }

    pub fn cells(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.keys().copied()
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adj
            .iter()
            .flat_map(|(&a, n)| n.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_irreflexive() {
        let g = InterferenceGraph::new([NodeId(1), NodeId(2), NodeId(3)], &[(NodeId(1), NodeId(2))]).unwrap();
        assert!(g.conflicts(NodeId(1), NodeId(2)));
        assert!(g.conflicts(NodeId(2), NodeId(1)));
        assert!(!g.conflicts(NodeId(1), NodeId(3)));
        assert!(!g.conflicts(NodeId(1), NodeId(1)));
        assert_eq!(g.edges(), vec![(NodeId(1), NodeId(2))]);
        assert_eq!(
            InterferenceGraph::new([NodeId(1)], &[(NodeId(1), NodeId(1))]),
            Err(GraphError::SelfLoop(NodeId(1)))
        );
    }
}
