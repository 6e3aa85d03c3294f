//! Ray antenna array (RAA) integrated sensing and communication toolkit.
//!
//! The crate covers the array front ends (RAA and a DFT-codebook ULA), their
//! beam patterns and angular resolution, OFDM signal synthesis for a
//! multi-target channel, the MUSIC / zero-forcing / 2D periodogram estimation
//! chain, and the uplink rate metric.

pub mod array;
pub mod beam;
pub mod comms;
pub mod error;
mod quad;
pub mod sensing;
pub mod signal;

pub use error::{Error, Result};
