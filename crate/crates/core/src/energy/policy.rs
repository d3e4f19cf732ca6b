use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::frames::ServiceClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadClass {
    Idle,
    Background,
    Moderate,
    Bursty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyPolicy {
    RfOff,
    TxPowerAdjust,
    LightSleepPolicy,
    DeepSleepPolicy,
    OpticalRateAdaptation,
    GlobalPolicySwitching,
}

impl EnergyPolicy {
    pub fn name(self) -> &'static str {
        match self {
            EnergyPolicy::RfOff => "rf_off",
            EnergyPolicy::TxPowerAdjust => "tx_power_adjust",
            EnergyPolicy::LightSleepPolicy => "light_sleep",
            EnergyPolicy::DeepSleepPolicy => "deep_sleep",
            EnergyPolicy::OpticalRateAdaptation => "optical_rate_adaptation",
            EnergyPolicy::GlobalPolicySwitching => "global_policy_switching",
        }
    }
}

/// Traffic-derived inputs to policy selection for one SFU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFeatures {
    pub load: LoadClass,
    pub services: BTreeSet<ServiceClass>,
    pub user_activity: bool,
    pub idle_ns: u64,
    pub iot_resident: bool,
    /// No upstream optical data in the window.
    pub optical_idle: bool,
    /// Externally predicted load for the coming window, when provided.
    pub predicted_load: Option<LoadClass>,
}

impl ScenarioFeatures {
    pub fn idle(idle_ns: u64) -> Self {
        ScenarioFeatures {
            load: LoadClass::Idle,
            services: BTreeSet::new(),
            user_activity: false,
            idle_ns,
            iot_resident: false,
            optical_idle: true,
            predicted_load: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyThresholds {
    /// Idle time separating short-term from long-term idle.
    pub long_idle_ns: u64,
    /// Upper bound of the background load class.
    pub background_max_bps: u64,
    /// Upper bound of the moderate load class.
    pub moderate_max_bps: u64,
    pub window_ns: u64,
}

impl Default for PolicyThresholds {
    fn default() -> Self {
        PolicyThresholds {
            long_idle_ns: 60_000_000_000,
            background_max_bps: 1_000_000,
            moderate_max_bps: 200_000_000,
            window_ns: 1_000_000_000,
        }
    }
}

pub fn classify_load(bytes: u64, window_ns: u64, th: &PolicyThresholds) -> LoadClass {
    if bytes == 0 {
        return LoadClass::Idle;
    }
    let bps = bytes as u128 * 8 * 1_000_000_000 / window_ns.max(1) as u128;
    if bps < th.background_max_bps as u128 {
        LoadClass::Background
    } else if bps < th.moderate_max_bps as u128 {
        LoadClass::Moderate
    } else {
        LoadClass::Bursty
    }
}

/// Rule table, first match wins:
///
/// | condition                                   | policy                  |
/// |---------------------------------------------|-------------------------|
/// | predicted load supplied                     | GlobalPolicySwitching   |
/// | resident IoT, moderate or heavier load      | TxPowerAdjust           |
/// | resident IoT otherwise                      | RfOff                   |
/// | moderate load                               | TxPowerAdjust           |
/// | optical idle with Wi-Fi user activity       | OpticalRateAdaptation   |
/// | idle, idle time >= long threshold           | DeepSleepPolicy         |
/// | anything else                               | LightSleepPolicy        |
pub fn select_policy(f: &ScenarioFeatures, th: &PolicyThresholds) -> EnergyPolicy {
    if f.predicted_load.is_some() {
        return EnergyPolicy::GlobalPolicySwitching;
    }
    if f.iot_resident {
        return if f.load >= LoadClass::Moderate { EnergyPolicy::TxPowerAdjust } else { EnergyPolicy::RfOff };
    }
    if f.load == LoadClass::Moderate {
        return EnergyPolicy::TxPowerAdjust;
    }
    if f.optical_idle && f.user_activity {
        return EnergyPolicy::OpticalRateAdaptation;
    }
    if f.load == LoadClass::Idle && f.idle_ns >= th.long_idle_ns {
        return EnergyPolicy::DeepSleepPolicy;
    }
    EnergyPolicy::LightSleepPolicy
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: u64 = 60_000_000_000;

    #[test]
    fn long_idle_without_iot_is_deep_sleep() {
        let th = PolicyThresholds::default();
        assert_eq!(select_policy(&ScenarioFeatures::idle(10 * MIN), &th), EnergyPolicy::DeepSleepPolicy);
        assert_eq!(select_policy(&ScenarioFeatures::idle(MIN - 1), &th), EnergyPolicy::LightSleepPolicy);
        assert_eq!(select_policy(&ScenarioFeatures::idle(MIN), &th), EnergyPolicy::DeepSleepPolicy);
    }

    #[test]
    fn iot_low_activity_is_rf_off() {
        let th = PolicyThresholds::default();
        for load in [LoadClass::Idle, LoadClass::Background] {
            for idle in [0, MIN, 10 * MIN] {
                let f = ScenarioFeatures { load, iot_resident: true, ..ScenarioFeatures::idle(idle) };
                assert_eq!(select_policy(&f, &th), EnergyPolicy::RfOff);
            }
        }
    }

    #[test]
    fn moderate_load_adjusts_tx_power() {
        let th = PolicyThresholds::default();
        let f = ScenarioFeatures { load: LoadClass::Moderate, user_activity: true, optical_idle: false, ..ScenarioFeatures::idle(0) };
        assert_eq!(select_policy(&f, &th), EnergyPolicy::TxPowerAdjust);
    }

    #[test]
    fn optical_idle_and_prediction() {
        let th = PolicyThresholds::default();
        let f = ScenarioFeatures { load: LoadClass::Background, user_activity: true, ..ScenarioFeatures::idle(0) };
        assert_eq!(select_policy(&f, &th), EnergyPolicy::OpticalRateAdaptation);
        let f = ScenarioFeatures { predicted_load: Some(LoadClass::Bursty), ..f };
        assert_eq!(select_policy(&f, &th), EnergyPolicy::GlobalPolicySwitching);
    }

    #[test]
    fn load_classes() {
        let th = PolicyThresholds::default();
        let w = 1_000_000_000;
        assert_eq!(classify_load(0, w, &th), LoadClass::Idle);
        assert_eq!(classify_load(1000, w, &th), LoadClass::Background);
        assert_eq!(classify_load(1_000_000, w, &th), LoadClass::Moderate);
        assert_eq!(classify_load(100_000_000, w, &th), LoadClass::Bursty);
    }
}
