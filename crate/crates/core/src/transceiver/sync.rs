//! Offline re-sampling and synchronization of a captured sequence with the
//! transmitted PRBS.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::decision::two_cluster_threshold;
use super::prbs::PRBS15_PERIOD;
use super::resample::{RationalRatio, Resampler};
use super::{CaptureSpec, TxSpec};
use crate::error::{Error, Result};
use crate::waveform::ElectricalWaveform;

/// Interpolation factor of the bit grid used for phase selection.
pub const SYNC_OVERSAMPLING: usize = 8;

/// Minimum normalized correlation between the folded soft values and the
/// reference. The null distribution has standard deviation `1/sqrt(32767)`
/// (about 0.0055), so 0.2 is more than 30 sigma.
pub const SYNC_THRESHOLD: f64 = 0.2;

/// Bits kept clear of each capture edge where the interpolation kernel
/// wraps around.
const EDGE_GUARD_BITS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SyncResult {
    /// Soft values at one sample per bit; element `j` belongs to reference
    /// bit `j mod period`.
    pub soft: Vec<f64>,
    /// Received bit `k` of the capture carries reference bit
    /// `(k - offset) mod period`.
    pub offset: usize,
    /// True when the received signal was inverted.
    pub inverted: bool,
    /// Selected sampling phase on the interpolated grid, `0..oversampling`.
    pub phase: usize,
    /// Capture bit index of `soft[0]`.
    pub start_bit: usize,
    /// Normalized correlation at the selected offset.
    pub correlation: f64,
}

/// `floor(total_samples * bit_rate / scope_rate)`.
pub fn raw_bit_count(tx: &TxSpec, cap: &CaptureSpec) -> Result<usize> {
    Ok(RationalRatio::of_rates(tx.bit_rate, cap.scope_rate)?.floor_mul(cap.total_samples))
}

/// Whole PRBS periods that survive alignment: `(floor(raw/P) - 1) P`.
pub fn usable_bit_count(raw_bits: usize, period: usize) -> usize {
    (raw_bits / period).saturating_sub(1) * period
}

/// Band-limited interpolation of the capture onto `oversampling` samples
/// per bit.
pub fn interpolate_to_bit_grid(capture: &ElectricalWaveform, tx: &TxSpec, oversampling: usize) -> Result<Vec<f64>> {
    let resampler = Resampler::from_rates(tx.bit_rate * oversampling as f64, capture.rate)?;
    let count = resampler.ratio().floor_mul(capture.samples.len());
    Ok(resampler.process(&capture.samples, count))
}

fn eye_opening(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let collected: Vec<f64> = values.collect();
    let threshold = two_cluster_threshold(&collected);
    collected.iter().map(|v| (v - threshold).abs()).sum::<f64>() / collected.len().max(1) as f64
}

/// Circular cross-correlation `c[d] = sum_i a[i + d] b[i]`.
fn circular_xcorr(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    inv.process(&mut prod);
    prod.iter().map(|z| z.re / n as f64).collect()
}

/// Re-sample a capture to the bit grid, pick the sampling phase with the
/// widest eye, find PRBS alignment and polarity by cross-correlation with
/// one period of `reference`, and return `usable_bit_count` aligned soft
/// values.
pub fn resample_sync(
    capture: &ElectricalWaveform,
    tx: &TxSpec,
    cap: &CaptureSpec,
    reference: &[u8],
) -> Result<SyncResult> {
    let period = reference.len();
    if period != PRBS15_PERIOD {
        return Err(Error::DimensionMismatch { expected: PRBS15_PERIOD, got: period });
    }
    if capture.rate != cap.scope_rate {
        return Err(Error::RateMismatch(cap.scope_rate, capture.rate));
    }
    let capture_spec = CaptureSpec { total_samples: capture.samples.len(), ..cap.clone() };
    let raw_bits = raw_bit_count(tx, &capture_spec)?;
    if raw_bits / period < 2 {
        return Err(Error::InvalidSpec(format!("capture holds {raw_bits} bits, fewer than two PRBS periods")));
    }
    let usable = usable_bit_count(raw_bits, period);

    let os = SYNC_OVERSAMPLING;
    let grid = interpolate_to_bit_grid(capture, tx, os)?;
    debug_assert!(grid.len() >= raw_bits * os);
    let phase = (0..os)
        .map(|p| (p, eye_opening((0..raw_bits).map(|k| grid[k * os + p]))))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let mut soft: Vec<f64> = (0..raw_bits).map(|k| grid[k * os + phase]).collect();
    drop(grid);

    let mean = soft.iter().sum::<f64>() / raw_bits as f64;
    let mut folded = vec![0.0; period];
    for (k, v) in soft.iter().enumerate() {
        folded[k % period] += v - mean;
    }
    let signs: Vec<f64> = reference.iter().map(|&b| if b != 0 { 1.0 } else { -1.0 }).collect();
    let corr = circular_xcorr(&folded, &signs);
    let norm = folded.iter().map(|x| x * x).sum::<f64>().sqrt() * (period as f64).sqrt();
    let (offset, peak) = corr
        .iter()
        .enumerate()
        .map(|(d, c)| (d, if norm > 0.0 { c / norm } else { 0.0 }))
        .fold((0, 0.0f64), |best, cur| if cur.1.abs() > best.1.abs() { cur } else { best });
    if peak.abs() < SYNC_THRESHOLD {
        return Err(Error::SyncFailure { peak: peak.abs(), threshold: SYNC_THRESHOLD });
    }
    let inverted = peak < 0.0;
    if inverted {
        soft.iter_mut().for_each(|v| *v = -*v);
    }

    let slack = raw_bits + 1 - usable - period;
    let guard = EDGE_GUARD_BITS.min(slack / 2);
    let start_bit = guard + (offset + period - guard % period) % period;
    soft.truncate(start_bit + usable);
    soft.drain(..start_bit);
    Ok(SyncResult { soft, offset, inverted, phase, start_bit, correlation: peak })
}
