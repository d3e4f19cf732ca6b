use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerMode {
    DistributedBaseline,
    CentralizedCoordinated,
    MacIntegrated,
    PhyRelay,
}

impl SchedulerMode {
    pub const ALL: [SchedulerMode; 4] = [
        SchedulerMode::DistributedBaseline,
        SchedulerMode::CentralizedCoordinated,
        SchedulerMode::MacIntegrated,
        SchedulerMode::PhyRelay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerMode::DistributedBaseline => "distributed_baseline",
            SchedulerMode::CentralizedCoordinated => "centralized_coordinated",
            SchedulerMode::MacIntegrated => "mac_integrated",
            SchedulerMode::PhyRelay => "phy_relay",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.replace('-', "_");
        Self::ALL.into_iter().find(|m| m.name() == norm)
            .or(match norm.as_str() {
                "baseline" | "distributed" => Some(SchedulerMode::DistributedBaseline),
                "centralized" => Some(SchedulerMode::CentralizedCoordinated),
                _ => None,
            })
    }

    /// Whether the MFU grants airtime instead of cells contending.
    pub fn is_coordinated(self) -> bool {
        self != SchedulerMode::DistributedBaseline
    }
}

/// Per-frame processing latency at each end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeLatencies {
    pub baseline_sfu_ns: u64,
    pub centralized_sfu_ns: u64,
    pub mac_integrated_mfu_ns: u64,
    pub mac_integrated_sfu_ns: u64,
    pub phy_relay_mfu_ns: u64,
    pub phy_relay_sfu_ns: u64,
}

impl Default for ModeLatencies {
    fn default() -> Self {
        ModeLatencies {
            baseline_sfu_ns: 20_000,
            centralized_sfu_ns: 20_000,
            mac_integrated_mfu_ns: 25_000,
            mac_integrated_sfu_ns: 0,
            phy_relay_mfu_ns: 30_000,
            phy_relay_sfu_ns: 0,
        }
    }
}

impl ModeLatencies {
    /// (MFU, SFU) processing latency for `mode`.
    pub fn for_mode(&self, mode: SchedulerMode) -> (u64, u64) {
        match mode {
            SchedulerMode::DistributedBaseline => (0, self.baseline_sfu_ns),
            SchedulerMode::CentralizedCoordinated => (0, self.centralized_sfu_ns),
            SchedulerMode::MacIntegrated => (self.mac_integrated_mfu_ns, self.mac_integrated_sfu_ns),
            SchedulerMode::PhyRelay => (self.phy_relay_mfu_ns, self.phy_relay_sfu_ns),
        }
    }
}
