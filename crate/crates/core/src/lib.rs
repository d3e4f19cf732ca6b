//! Deterministic discrete-event simulator of a fiber-to-the-room network.

pub mod compare;
pub mod config;
pub mod energy;
pub mod frames;
pub mod links;
pub mod management;
pub mod metrics;
pub mod network;
pub mod scheduling;
pub mod sim;
