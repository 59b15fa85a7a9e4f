//! Discrete-event simulator for energy-aware wireless sensor networks.
//!
//! The simulator combines a deterministic event kernel, a free-space radio
//! medium, an SNIR-tracking receiver model with per-field bit errors, a
//! state-timeline energy ledger, waypoint mobility, and a TDMA beacon/RSSI
//! readout application. Runs are reproducible: identical configuration and
//! seed produce byte-identical output files.

pub mod energy;
pub mod geom;
pub mod kernel;
pub mod medium;
pub mod mobility;
pub mod netapp;
pub mod phy;
pub mod rng;
pub mod scenario;
pub mod time;

pub use kernel::NodeId;
pub use time::SimTime;
