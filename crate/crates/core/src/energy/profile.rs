use serde::{Deserialize, Serialize};

use super::PowerState;

/// Power draw per state in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Watts {
    pub active: f64,
    pub idle: f64,
    pub reduced_tx: f64,
    pub rf_off: f64,
    pub light_sleep: f64,
    pub deep_sleep: f64,
}

impl Watts {
    pub fn of(&self, s: PowerState) -> f64 {
        match s {
            PowerState::Active => self.active,
            PowerState::Idle => self.idle,
            PowerState::ReducedTx => self.reduced_tx,
            PowerState::RfOff => self.rf_off,
            PowerState::LightSleep => self.light_sleep,
            PowerState::DeepSleep => self.deep_sleep,
        }
    }

    /// A device with only Active and Idle states.
    pub fn two_state(active: f64, idle: f64) -> Self {
        Watts { active, idle, reduced_tx: idle, rf_off: idle, light_sleep: idle, deep_sleep: idle }
    }

    fn validate(&self, who: &str) -> Result<(), String> {
        let chain = [self.active, self.idle, self.reduced_tx, self.rf_off, self.light_sleep, self.deep_sleep];
        if chain.windows(2).any(|w| w[0] < w[1]) || self.deep_sleep <= 0.0 || chain.iter().any(|w| !w.is_finite()) {
            return Err(format!(
                "{who} watts must satisfy active >= idle >= reduced_tx >= rf_off >= light_sleep >= deep_sleep > 0"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timers {
    pub t_act_idle_ns: u64,
    pub t_idle_sleep_ns: u64,
    pub t_listen_ns: u64,
    pub listen_window_ns: u64,
    pub wake_light_ns: u64,
    pub wake_deep_ns: u64,
}

impl Default for Timers {
    fn default() -> Self {
        Timers {
            t_act_idle_ns: 100_000_000,
            t_idle_sleep_ns: 10_000_000_000,
            t_listen_ns: 1_000_000_000,
            listen_window_ns: 1_000_000,
            wake_light_ns: 10_000_000,
            wake_deep_ns: 100_000_000,
        }
    }
}

/// Wattages for each device type plus the state-machine timers.
///
/// Defaults: with every node in the same activity state, the MFU plus four
/// SFUs draw exactly 1.5 times the single FTTH gateway (10 + 4*5 = 30 W
/// against 20 W active, 8 + 4*4 = 24 W against 16 W idle). These are
/// calibration values, not measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerProfile {
    pub mfu: Watts,
    pub sfu: Watts,
    pub gateway: Watts,
    pub timers: Timers,
}

impl Default for PowerProfile {
    fn default() -> Self {
        PowerProfile {
            mfu: Watts::two_state(10.0, 8.0),
            sfu: Watts { active: 5.0, idle: 4.0, reduced_tx: 3.8, rf_off: 2.5, light_sleep: 1.5, deep_sleep: 0.5 },
            gateway: Watts::two_state(20.0, 16.0),
            timers: Timers::default(),
        }
    }
}

impl PowerProfile {
    pub fn validate(&self) -> Result<(), String> {
        self.mfu.validate("mfu")?;
        self.sfu.validate("sfu")?;
        self.gateway.validate("gateway")?;
        let t = &self.timers;
        if t.wake_light_ns == 0 || t.wake_deep_ns == 0 || t.t_listen_ns == 0 || t.t_act_idle_ns == 0 {
            return Err("wake latencies, listen interval and activity timeout must be positive".into());
        }
        if t.listen_window_ns > t.t_listen_ns {
            return Err("listen window longer than the listen interval".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_is_ordered() {
        assert!(PowerProfile::default().validate().is_ok());
        let mut p = PowerProfile::default();
        p.sfu.deep_sleep = 0.0;
        assert!(p.validate().is_err());
    }
}
