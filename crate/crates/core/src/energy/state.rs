use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerState {
    Active,
    Idle,
    LightSleep,
    DeepSleep,
    RfOff,
    ReducedTx,
}

impl PowerState {
    pub const ALL: [PowerState; 6] = [
        PowerState::Active,
        PowerState::Idle,
        PowerState::LightSleep,
        PowerState::DeepSleep,
        PowerState::RfOff,
        PowerState::ReducedTx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PowerState::Active => "active",
            PowerState::Idle => "idle",
            PowerState::LightSleep => "light_sleep",
            PowerState::DeepSleep => "deep_sleep",
            PowerState::RfOff => "rf_off",
            PowerState::ReducedTx => "reduced_tx",
        }
    }

    /// Serving user traffic (full or reduced transmit power).
    pub fn is_active(self) -> bool {
        matches!(self, PowerState::Active | PowerState::ReducedTx)
    }

    pub fn is_sleeping(self) -> bool {
        matches!(self, PowerState::LightSleep | PowerState::DeepSleep | PowerState::RfOff)
    }

    /// The transition table. Sleep states exit only through Idle.
    pub fn can_go(self, to: PowerState) -> bool {
        use PowerState::*;
        matches!(
            (self, to),
            (Active, Idle)
                | (Active, ReducedTx)
                | (ReducedTx, Active)
                | (ReducedTx, Idle)
                | (Idle, Active)
                | (Idle, ReducedTx)
                | (Idle, LightSleep)
                | (Idle, RfOff)
                | (LightSleep, DeepSleep)
                | (LightSleep, Idle)
                | (DeepSleep, Idle)
                | (RfOff, Idle)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal power transition {from:?} -> {to:?}")]
pub struct IllegalTransition {
    pub from: PowerState,
    pub to: PowerState,
}

/// One node's power state with a count of refused transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerMachine {
    state: PowerState,
    since: SimTime,
    pub rejected: u64,
}

impl PowerMachine {
    pub fn new(state: PowerState) -> Self {
        PowerMachine { state, since: SimTime::ZERO, rejected: 0 }
    }

    pub fn state(&self) -> PowerState {
        self.state
    }

    pub fn since(&self) -> SimTime {
        self.since
    }

    pub fn go(&mut self, now: SimTime, to: PowerState) -> Result<PowerState, IllegalTransition> {
        if !self.state.can_go(to) {
            self.rejected += 1;
            return Err(IllegalTransition { from: self.state, to });
        }
        let from = self.state;
        self.state = to;
        self.since = now;
        Ok(from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_sleep_from_active_rejected() {
        let mut m = PowerMachine::new(PowerState::Active);
        assert!(m.go(SimTime(1), PowerState::DeepSleep).is_err());
        assert_eq!(m.rejected, 1);
        assert_eq!(m.state(), PowerState::Active);
    }

    #[test]
    fn idle_to_light_to_deep_to_idle() {
        let mut m = PowerMachine::new(PowerState::Active);
        for s in [PowerState::Idle, PowerState::LightSleep, PowerState::DeepSleep, PowerState::Idle, PowerState::Active] {
            m.go(SimTime(1), s).unwrap();
        }
        assert_eq!(m.rejected, 0);
    }

    #[test]
    fn sleep_states_exit_only_to_idle() {
        for from in PowerState::ALL.into_iter().filter(|s| s.is_sleeping()) {
            for to in PowerState::ALL {
                if from.can_go(to) {
                    assert!(to == PowerState::Idle || (from, to) == (PowerState::LightSleep, PowerState::DeepSleep));
                }
            }
        }
    }
}
