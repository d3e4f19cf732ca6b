use std::collections::BTreeMap;

use super::PowerState;
use crate::sim::NodeId;

/// MFU view of SFU sleep reports, deciding when to order deep sleep.
#[derive(Debug, Clone, Default)]
pub struct DeepSleepCoordinator {
    reported: BTreeMap<NodeId, PowerState>,
    commanded: bool,
    pub commands_issued: u64,
}

impl DeepSleepCoordinator {
    pub fn new(sfus: impl IntoIterator<Item = NodeId>) -> Self {
        DeepSleepCoordinator {
            reported: sfus.into_iter().map(|s| (s, PowerState::Active)).collect(),
            commanded: false,
            commands_issued: 0,
        }
    }

    pub fn report(&mut self, sfu: NodeId, state: PowerState) {
        if state != PowerState::LightSleep && state != PowerState::DeepSleep {
            self.commanded = false;
        }
        self.reported.insert(sfu, state);
    }

    pub fn last_report(&self, sfu: NodeId) -> Option<PowerState> {
        self.reported.get(&sfu).copied()
    }

    pub fn all_light_sleeping(&self) -> bool {
        !self.reported.is_empty() && self.reported.values().all(|&s| s == PowerState::LightSleep)
    }

    /// True once per episode in which every SFU has reported light sleep.
    pub fn poll(&mut self) -> bool {
        if !self.commanded && self.all_light_sleeping() {
            self.commanded = true;
            self.commands_issued += 1;
            return true;
        }
        false
    }
}
