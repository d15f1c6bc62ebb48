//! Transmitter and receiver ends of the link: PRBS source, OOK modulator,
//! port de-correlation, square-law detection, scope capture, offline
//! re-sampling with synchronization, and bit decisions.

mod capture;
mod decision;
mod detect;
mod eye;
mod modulate;
mod prbs;
mod resample;
mod sync;

pub use capture::{read_capture, write_capture, CaptureHeader};
pub use decision::{decide_and_count, two_cluster_threshold, SequenceReport};
pub use detect::{photodetect, scope_sample};
pub use eye::{eye_points, write_eye_csv};
pub use modulate::{decorrelate_ports, ook_modulate};
pub use prbs::{prbs15, DEFAULT_PRBS_SEED, PRBS15_PERIOD};
pub use resample::{RationalRatio, Resampler};
pub use sync::{
    interpolate_to_bit_grid, raw_bit_count, resample_sync, usable_bit_count, SyncResult, SYNC_OVERSAMPLING,
    SYNC_THRESHOLD,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_extinction() -> f64 {
    13.0
}

fn default_prbs_seed() -> u16 {
    DEFAULT_PRBS_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxSpec {
    /// Line rate [bit/s].
    pub bit_rate: f64,
    /// Simulation oversampling, at least 4.
    pub samples_per_bit: usize,
    pub prbs_order: u32,
    /// Circular delay of every transmitter copy, in bits; pairwise distinct.
    pub port_delay_bits: Vec<usize>,
    /// Raised-cosine edge duration as a fraction of a bit.
    pub rise_time_bits: f64,
    /// Modulator extinction ratio `P1/P0` [dB].
    #[serde(default = "default_extinction")]
    pub extinction_ratio_db: f64,
    #[serde(default = "default_prbs_seed")]
    pub prbs_seed: u16,
}

impl Default for TxSpec {
    fn default() -> Self {
        TxSpec {
            bit_rate: 28e9,
            samples_per_bit: 4,
            prbs_order: 15,
            port_delay_bits: vec![0, 8191, 16382, 24573],
            rise_time_bits: 0.35,
            extinction_ratio_db: default_extinction(),
            prbs_seed: DEFAULT_PRBS_SEED,
        }
    }
}

impl TxSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidSpec(format!("tx.{m}")));
        if !(self.bit_rate > 0.0 && self.bit_rate.is_finite()) {
            return fail("bit_rate must be positive");
        }
        if self.samples_per_bit < 4 {
            return fail("samples_per_bit must be >= 4");
        }
        if self.prbs_order != 15 {
            return fail("prbs_order: only PRBS-15 is supported");
        }
        let mut delays = self.port_delay_bits.clone();
        delays.sort_unstable();
        delays.dedup();
        if delays.len() != self.port_delay_bits.len() || delays.is_empty() {
            return fail("port_delay_bits must be non-empty and pairwise distinct");
        }
        if !(0.0..=1.0).contains(&self.rise_time_bits) {
            return fail("rise_time_bits must lie in [0, 1]");
        }
        if !(self.extinction_ratio_db > 0.0) {
            return fail("extinction_ratio_db must be positive");
        }
        if self.prbs_seed & 0x7FFF == 0 {
            return Err(Error::ZeroSeed);
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.bit_rate * self.samples_per_bit as f64
    }

    /// Mark power (unit).
    pub fn mark_power(&self) -> f64 {
        1.0
    }

    pub fn space_power(&self) -> f64 {
        10f64.powf(-self.extinction_ratio_db / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureSpec {
    /// Scope sampling rate [samples/s].
    pub scope_rate: f64,
    pub total_samples: usize,
    /// Std of the additive receiver noise, relative to the unit mark level.
    pub electrical_noise_sigma: f64,
}

/// Samples per captured sequence.
pub const DEFAULT_TOTAL_SAMPLES: usize = 1_048_576;

impl CaptureSpec {
    pub fn new(scope_rate: f64) -> Self {
        CaptureSpec { scope_rate, total_samples: DEFAULT_TOTAL_SAMPLES, electrical_noise_sigma: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scope_rate > 0.0 && self.scope_rate.is_finite()) {
            return Err(Error::InvalidSpec("capture.scope_rate must be positive".into()));
        }
        if self.total_samples == 0 {
            return Err(Error::InvalidSpec("capture.total_samples must be positive".into()));
        }
        if !(self.electrical_noise_sigma >= 0.0 && self.electrical_noise_sigma.is_finite()) {
            return Err(Error::InvalidSpec("capture.electrical_noise_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Noise sigma that gives Q-factor `q` for the eye of `tx`, assuming equal
/// noise on both rails.
pub fn sigma_for_q(tx: &TxSpec, q: f64) -> f64 {
    (tx.mark_power() - tx.space_power()) / (2.0 * q)
}
