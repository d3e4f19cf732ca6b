//! Integrated remote management: extended-OMCI routing through the MFU
//! adapter, per-device managed-entity stores, liveness polling and alarms.

mod adapter;
mod alarms;
mod liveness;
mod mib;
mod olt;

pub use adapter::{AdapterError, OmciAdapter, TransactionWindow, WindowSlot};
pub use alarms::{Alarm, AlarmKind, AlarmLog};
pub use liveness::{LivenessEvent, LivenessMonitor};
pub use mib::{result, EntityClass, MibError, MibStore};
pub use olt::{Olt, OltStats};
