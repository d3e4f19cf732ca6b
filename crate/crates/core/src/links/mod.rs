//! Physical media: the point-to-multipoint fiber plant and the Wi-Fi air
//! interface.

mod interference;
mod optical;
mod wifi;

pub use interference::{GraphError, InterferenceGraph};
pub use optical::{DownstreamTx, OpticalLink, OpticalStats, Rate, UpstreamBurst, UpstreamFault};
pub use wifi::{AirMedium, AirMode, AirStats, Csma, TxOutcome, TxToken, WifiCell, WifiParams};
