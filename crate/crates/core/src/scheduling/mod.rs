//! The MFU control plane: status collection, air-grant sequencing, OFDMA
//! uplink coordination, upstream slot maps and the architecture variants.

mod checker;
mod dba;
mod grants;
mod modes;
mod ofdma;
mod relay;
mod status;

pub use checker::{check_grants, check_tamap, ScheduleViolation};
pub use dba::{BurstTiming, Dba, DbaConfig};
pub use grants::{grant_downlink_airtime, grant_order, needed_airtime, sequence_grants, AirGrant, GrantDemand, GrantReason};
pub use modes::{ModeLatencies, SchedulerMode};
pub use ofdma::{coordinate_ofdma_uplink, forwarding_delay, RuAllocation, UplinkBwRequest};
pub use relay::{relay_buffer_bytes, relay_slot_ns, RelayBuffer};
pub use status::{SfuStatusReport, StaBacklog, StatusBoard};
