//! Simulator of a mode-group-division-multiplexed link over graded-index
//! multimode fiber with on-off keying and direct detection.
//!
//! The pipeline is `transceiver` (PRBS, OOK) → `mux` → `channel` → `mux`
//! (demux) → `transceiver` (photodiode, scope, sync, decisions) →
//! `analysis` → `fec`. [`experiment`] wires it together.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod config;
pub mod db;
pub mod error;
pub mod experiment;
pub mod fec;
pub mod field;
pub mod modes;
pub mod mux;
pub mod seed;
pub mod transceiver;
pub mod waveform;

pub use error::{Error, Result};
