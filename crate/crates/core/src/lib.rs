//! Throughput-optimal power allocation for a half-duplex decode-and-forward
//! relay channel whose transmitters draw non-negligible circuit power.

pub mod cli;
pub mod dlt;
pub mod error;
pub mod mixed;
pub mod model;
pub mod numerics;
pub mod rat_dl;
pub mod rat_wdl;
pub mod sim;

pub use error::{Error, Result};
pub use model::{ChannelGains, CircuitModel, CircuitPowers, Mode, ModeAllocation};
