//! Graded-index fiber propagation with block-constant mode coupling.
//!
//! Each captured sequence (a "block") sees one realization
//! `H = Q * D`: `D` carries the per-mode phase `exp(j beta L)`, `Q` mixes
//! modes strongly inside every group (an independent Haar unitary per
//! group) and weakly between groups. The inter-group part is
//! `exp(A)` for an anti-Hermitian `A` whose off-block entries are complex
//! Gaussian, so the expected off-block power per column is set by
//! `xt_db` to leading order while `Q` stays unitary.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::db;
use crate::error::{Error, Result};
use crate::modes::{group_delay, group_propagation_constant, FiberSpec, ModeBasis};
use crate::mux::{Label, TransferMatrix};
use crate::seed::{self, tag};
use crate::waveform::FieldWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftModel {
    /// Coupling is `(S + d Z_b) / sqrt(1 + d^2)` with a fresh `Z_b` per block.
    #[default]
    Independent,
    /// Coupling is `(S + d sum_{j<=b} Z_j) / sqrt(1 + b d^2)`.
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosstalkSpec {
    /// Mean inter-group crosstalk power ratio [dB], `-inf` for none.
    #[serde(with = "db")]
    pub xt_db: f64,
    /// Scale of the per-block perturbation of the coupling amplitudes.
    pub drift_sigma: f64,
    #[serde(default)]
    pub drift: DriftModel,
    pub seed: u64,
}

impl Default for CrosstalkSpec {
    fn default() -> Self {
        CrosstalkSpec { xt_db: DEFAULT_XT_DB, drift_sigma: 10.0, drift: DriftModel::Independent, seed: 0x5854_0001 }
    }
}

/// Calibrated default crosstalk level.
pub const DEFAULT_XT_DB: f64 = -20.0;

impl CrosstalkSpec {
    pub fn none() -> Self {
        CrosstalkSpec { xt_db: f64::NEG_INFINITY, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.xt_db.is_nan() || self.xt_db > 0.0 {
            return Err(Error::InvalidSpec("crosstalk.xt_db must be <= 0".into()));
        }
        if !(self.drift_sigma >= 0.0 && self.drift_sigma.is_finite()) {
            return Err(Error::InvalidSpec("crosstalk.drift_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Channel state of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub block_index: u64,
    /// Mode-to-mode transfer matrix.
    pub h: TransferMatrix,
    /// Group delay `tau(m) L` of every basis group [s].
    pub group_delays: Vec<f64>,
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary of size `n` (QR of a Ginibre matrix with the
/// phases of `R`'s diagonal divided out).
pub fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = (0..n).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Nearest unitary (polar factor `U V^H`).
fn unitarize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    u * v_t
}

fn coupling_draw(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng))
}

pub fn draw_block_channel(
    spec: &CrosstalkSpec,
    fiber: &FiberSpec,
    basis: &ModeBasis,
    block_index: u64,
) -> Result<ChannelRealization> {
    spec.validate()?;
    if basis.is_empty() {
        return Err(Error::InvalidSpec("mode basis is empty".into()));
    }
    let n = basis.len();

    let mut block_rng = seed::rng(spec.seed, &[tag::CHANNEL_BLOCK, block_index, 0]);
    let mut intra = DMatrix::zeros(n, n);
    for g in 0..basis.groups().len() {
        let range = basis.group_range(g);
        let u = haar_unitary(range.len(), &mut block_rng);
        intra.view_mut((range.start, range.start), (range.len(), range.len())).copy_from(&u);
    }

    let xt = 10f64.powf(spec.xt_db / 10.0);
    let q = if xt > 0.0 {
        let d = spec.drift_sigma;
        let fixed = coupling_draw(n, &mut seed::rng(spec.seed, &[tag::CHANNEL_STATIC]));
        let coupling = match spec.drift {
            DriftModel::Independent => {
                let z = coupling_draw(n, &mut seed::rng(spec.seed, &[tag::CHANNEL_BLOCK, block_index, 1]));
                (fixed + z * Complex64::new(d, 0.0)) / Complex64::new((1.0 + d * d).sqrt(), 0.0)
            }
            DriftModel::RandomWalk => {
                let mut acc = fixed;
                for j in 1..=block_index {
                    let z = coupling_draw(n, &mut seed::rng(spec.seed, &[tag::CHANNEL_BLOCK, j, 1]));
                    acc += z * Complex64::new(d, 0.0);
                }
                acc / Complex64::new((1.0 + block_index as f64 * d * d).sqrt(), 0.0)
            }
        };
        // one variance for every off-block pair, scaled so the basis-average
        // off-block power per column is `xt`
        let off_entries: usize = (0..n).map(|c| n - basis.group_range(basis.group_index(c)).len()).sum();
        let sigma = (xt * n as f64 / off_entries as f64).sqrt();
        let mut generator = DMatrix::zeros(n, n);
        for c in 0..n {
            for r in 0..c {
                if basis.group_index(r) != basis.group_index(c) {
                    let v = coupling[(r, c)] * sigma;
                    generator[(r, c)] = v;
                    generator[(c, r)] = -v.conj();
                }
            }
        }
        unitarize(&(&intra * expm(&generator)))
    } else {
        intra
    };

    let length = fiber.length;
    let mut phases = Vec::with_capacity(n);
    for mode in basis.modes() {
        let beta = group_propagation_constant(mode.group_order(), fiber)?;
        let phase = (beta * length).rem_euclid(2.0 * PI);
        phases.push(Complex64::from_polar(1.0, phase));
    }
    let mut h = q;
    for (j, p) in phases.iter().enumerate() {
        h.column_mut(j).iter_mut().for_each(|z| *z *= p);
    }
    let group_delays = basis
        .groups()
        .iter()
        .map(|g| group_delay(g.order(), fiber).map(|tau| tau * length))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Label> = basis.modes().iter().copied().map(Label::Mode).collect();
    Ok(ChannelRealization { block_index, h: TransferMatrix::new(h, labels.clone(), labels)?, group_delays })
}

/// Circular fractional delay by `delay` seconds, applied in the frequency
/// domain. Bins above `len/2` are negative frequencies.
pub fn fractional_delay(samples: &mut [Complex64], rate: f64, delay: f64) {
    let len = samples.len();
    if len == 0 || delay == 0.0 {
        return;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(samples);
    for (k, s) in samples.iter_mut().enumerate() {
        let bin = if k < len.div_ceil(2) { k as f64 } else { k as f64 - len as f64 };
        let f = bin * rate / len as f64;
        *s *= Complex64::from_polar(1.0 / len as f64, -2.0 * PI * f * delay);
    }
    planner.plan_fft_inverse(len).process(samples);
}

/// Delay every group by its group delay relative to the fastest group, then
/// mix sample-wise by `H`. One waveform per basis mode, in basis order.
pub fn propagate(
    fields: &[FieldWaveform],
    realization: &ChannelRealization,
    basis: &ModeBasis,
) -> Result<Vec<FieldWaveform>> {
    if fields.len() != basis.len() || realization.h.inputs().len() != basis.len() {
        return Err(Error::BasisMismatch(format!("{} waveforms for {} modes", fields.len(), basis.len())));
    }
    if realization.group_delays.len() != basis.groups().len() {
        return Err(Error::BasisMismatch("group delay count".into()));
    }
    let rate = fields[0].rate;
    if let Some(w) = fields.iter().find(|w| w.rate != rate) {
        return Err(Error::RateMismatch(rate, w.rate));
    }
    let earliest = realization.group_delays.iter().copied().fold(f64::INFINITY, f64::min);
    let delayed: Vec<Vec<Complex64>> = fields
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut s = w.samples.clone();
            let tau = realization.group_delays[basis.group_index(i)] - earliest;
            fractional_delay(&mut s, rate, tau);
            s
        })
        .collect();
    let mixed = realization.h.apply_waveforms(&delayed)?;
    Ok(mixed.into_iter().map(|s| FieldWaveform::new(rate, s)).collect())
}

/// Add circular complex Gaussian noise so that each waveform's mean power
/// over noise power equals `10^(osnr_db/10)`.
pub fn add_optical_noise(fields: &[FieldWaveform], osnr_db: f64, seed: u64) -> Vec<FieldWaveform> {
    if osnr_db == f64::INFINITY {
        return fields.to_vec();
    }
    let snr = 10f64.powf(osnr_db / 10.0);
    fields
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let sigma = (w.mean_power() / snr).sqrt();
            let mut rng = seed::rng(seed, &[tag::OPTICAL_NOISE, i as u64]);
            let samples = w.samples.iter().map(|s| s + complex_gaussian(&mut rng) * sigma).collect();
            FieldWaveform::new(w.rate, samples)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> ModeBasis {
        ModeBasis::new(FiberSpec::default(), &[3, 4, 5, 6]).unwrap()
    }

    fn unitarity_error(m: &DMatrix<Complex64>) -> f64 {
        let n = m.nrows();
        (m.adjoint() * m - DMatrix::<Complex64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn off_block_power(r: &ChannelRealization, b: &ModeBasis) -> (f64, f64) {
        let h = r.h.matrix();
        let (mut off, mut on) = (0.0, 0.0);
        for row in 0..b.len() {
            for col in 0..b.len() {
                if b.group_index(row) == b.group_index(col) {
                    on += h[(row, col)].norm_sqr();
                } else {
                    off += h[(row, col)].norm_sqr();
                }
            }
        }
        (off, on)
    }

    #[test]
    fn no_crosstalk_is_block_diagonal() {
        let b = basis();
        let r = draw_block_channel(&CrosstalkSpec::none(), b.fiber(), &b, 3).unwrap();
        for row in 0..b.len() {
            for col in 0..b.len() {
                if b.group_index(row) != b.group_index(col) {
                    assert_eq!(r.h.matrix()[(row, col)], Complex64::new(0.0, 0.0));
                }
            }
        }
        assert!(unitarity_error(r.h.matrix()) < 1e-9);
    }

    #[test]
    fn block_is_reproducible_and_blocks_differ() {
        let b = basis();
        let spec = CrosstalkSpec::default();
        let r1 = draw_block_channel(&spec, b.fiber(), &b, 7).unwrap();
        let r2 = draw_block_channel(&spec, b.fiber(), &b, 7).unwrap();
        assert_eq!(r1, r2);
        let r3 = draw_block_channel(&spec, b.fiber(), &b, 8).unwrap();
        assert_ne!(r1.h, r3.h);
        assert!(unitarity_error(r1.h.matrix()) < 1e-9);
    }

    #[test]
    fn random_walk_is_unitary_and_correlated() {
        let b = basis();
        let spec =
            CrosstalkSpec { drift: DriftModel::RandomWalk, drift_sigma: 0.3, xt_db: -15.0, ..CrosstalkSpec::default() };
        for block in [0, 1, 5] {
            let r = draw_block_channel(&spec, b.fiber(), &b, block).unwrap();
            assert!(unitarity_error(r.h.matrix()) < 1e-9);
        }
    }

    #[test]
    fn mean_crosstalk_matches_target() {
        let b = basis();
        let spec = CrosstalkSpec { xt_db: -20.0, ..CrosstalkSpec::default() };
        let mut ratio = 0.0;
        let draws = 1000;
        for block in 0..draws {
            let r = draw_block_channel(&spec, b.fiber(), &b, block).unwrap();
            let (off, on) = off_block_power(&r, &b);
            ratio += off / on;
        }
        ratio /= draws as f64;
        assert!((ratio / 1e-2 - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn haar_and_expm_are_unitary() {
        let mut rng = seed::rng(1, &[]);
        for n in 1..6 {
            assert!(unitarity_error(&haar_unitary(n, &mut rng)) < 1e-12);
        }
        let mut a = DMatrix::<Complex64>::zeros(3, 3);
        a[(0, 1)] = Complex64::new(0.7, -1.2);
        a[(1, 0)] = -a[(0, 1)].conj();
        a[(2, 2)] = Complex64::new(0.0, 2.5);
        assert!(unitarity_error(&expm(&a)) < 1e-12);
        // exp of a diagonal matrix
        let e = expm(&a.map(|z| if z.re == 0.0 { z } else { Complex64::new(0.0, 0.0) }));
        assert!((e[(2, 2)] - Complex64::from_polar(1.0, 2.5)).norm() < 1e-13);
    }

    fn tone(len: usize, rate: f64) -> FieldWaveform {
        let samples = (0..len)
            .map(|i| Complex64::from_polar(1.0, 0.3 * i as f64) * (1.0 + 0.5 * (i as f64 * 0.01).sin()))
            .collect();
        FieldWaveform::new(rate, samples)
    }

    #[test]
    fn identity_channel_is_transparent() {
        let b = basis();
        let labels: Vec<Label> = b.modes().iter().copied().map(Label::Mode).collect();
        let real = ChannelRealization {
            block_index: 0,
            h: TransferMatrix::identity(labels),
            group_delays: vec![0.0; b.groups().len()],
        };
        let fields: Vec<_> = (0..b.len()).map(|_| tone(64, 1e9)).collect();
        let out = propagate(&fields, &real, &b).unwrap();
        assert_eq!(out, fields);
    }

    #[test]
    fn unitary_channel_preserves_instantaneous_power() {
        let b = basis();
        let real = draw_block_channel(&CrosstalkSpec::default(), b.fiber(), &b, 1).unwrap();
        let fields: Vec<_> = (0..b.len())
            .map(|i| {
                let mut w = tone(256, 1e9);
                w.samples.rotate_left(i * 17);
                w
            })
            .collect();
        let zero = ChannelRealization { group_delays: vec![0.0; 4], ..real };
        let out = propagate(&fields, &zero, &b).unwrap();
        for t in 0..256 {
            let pin: f64 = fields.iter().map(|w| w.samples[t].norm_sqr()).sum();
            let pout: f64 = out.iter().map(|w| w.samples[t].norm_sqr()).sum();
            assert!((pout / pin - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn delay_shifts_correlation_peak() {
        let b = ModeBasis::new(FiberSpec::default(), &[3, 4]).unwrap();
        let labels: Vec<Label> = b.modes().iter().copied().map(Label::Mode).collect();
        let rate = 1e10;
        let tau = 37.4 / rate;
        let real = ChannelRealization {
            block_index: 0,
            h: TransferMatrix::identity(labels),
            group_delays: vec![1e-3, 1e-3 + tau],
        };
        let mut rng = seed::rng(9, &[]);
        let base: Vec<Complex64> = (0..1024).map(|_| complex_gaussian(&mut rng)).collect();
        let fields: Vec<_> = (0..b.len()).map(|_| FieldWaveform::new(rate, base.clone())).collect();
        let out = propagate(&fields, &real, &b).unwrap();
        let corr =
            |w: &[Complex64], lag: usize| -> f64 { (0..1024).map(|i| (w[(i + lag) % 1024] * base[i].conj()).re).sum() };
        let peak = |w: &[Complex64]| (0..1024).max_by(|&a, &c| corr(w, a).total_cmp(&corr(w, c))).unwrap();
        assert_eq!(peak(&out[0].samples), 0);
        assert_eq!(peak(&out[1].samples), (tau * rate).round() as usize);
    }

    #[test]
    fn propagate_rejects_mismatches() {
        let b = basis();
        let real = draw_block_channel(&CrosstalkSpec::none(), b.fiber(), &b, 0).unwrap();
        let mut fields: Vec<_> = (0..b.len()).map(|_| tone(16, 1e9)).collect();
        assert!(matches!(propagate(&fields[1..], &real, &b), Err(Error::BasisMismatch(_))));
        fields[3].rate = 2e9;
        assert!(matches!(propagate(&fields, &real, &b), Err(Error::RateMismatch(..))));
    }

    #[test]
    fn optical_noise_statistics() {
        let w = vec![tone(200_000, 1e9)];
        assert_eq!(add_optical_noise(&w, f64::INFINITY, 1), w);
        let noisy = add_optical_noise(&w, 20.0, 1);
        let noise_power: f64 =
            noisy[0].samples.iter().zip(&w[0].samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / 200_000.0;
        let snr = w[0].mean_power() / noise_power;
        assert!((snr / 100.0 - 1.0).abs() < 0.05, "{snr}");
        let other = add_optical_noise(&w, 20.0, 2);
        assert_ne!(noisy, other);
        assert_eq!(noisy, add_optical_noise(&w, 20.0, 1));
        let noise_power2: f64 =
            other[0].samples.iter().zip(&w[0].samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / 200_000.0;
        assert!((noise_power2 / noise_power - 1.0).abs() < 0.05);
    }
}
