//! Power state machines, energy policy selection, sleep buffering and
//! energy accounting.

mod buffer;
mod coord;
mod ledger;
mod policy;
mod profile;
mod state;

pub use buffer::SleepBuffer;
pub use coord::DeepSleepCoordinator;
pub use ledger::{account_energy, EnergyLedger, EnergyReport, Interval, LedgerError, NodeEnergy, NodeKind};
pub use policy::{classify_load, select_policy, EnergyPolicy, LoadClass, PolicyThresholds, ScenarioFeatures};
pub use profile::{PowerProfile, Timers, Watts};
pub use state::{IllegalTransition, PowerMachine, PowerState};
