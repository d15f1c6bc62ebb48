//! Band-limited rational-ratio resampling with a Kaiser-windowed sinc.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Zero crossings of the sinc on each side of the kernel centre.
const ZERO_CROSSINGS: f64 = 16.0;
/// Passband edge relative to the lower of the two Nyquist frequencies.
const CUTOFF: f64 = 0.9;
const KAISER_BETA: f64 = 8.6;

/// `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalRatio {
    pub num: u64,
    pub den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl RationalRatio {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        RationalRatio { num: num / g, den: den / g }
    }

    /// Best rational approximation of `x` with denominator at most
    /// `max_den`, accepted only if it reproduces `x` to 1e-12.
    pub fn approximate(x: f64, max_den: u64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidSpec(format!("resampling ratio {x} is not positive")));
        }
        let (mut h0, mut h1) = (0u64, 1u64);
        let (mut k0, mut k1) = (1u64, 0u64);
        let mut r = x;
        for _ in 0..64 {
            let a = r.floor();
            if a > u64::MAX as f64 / 2.0 {
                break;
            }
            let a = a as u64;
            let h2 = a.checked_mul(h1).and_then(|v| v.checked_add(h0));
            let k2 = a.checked_mul(k1).and_then(|v| v.checked_add(k0));
            let (Some(h2), Some(k2)) = (h2, k2) else { break };
            if k2 > max_den {
                break;
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            if ((h1 as f64 / k1 as f64) / x - 1.0).abs() < 1e-13 {
                break;
            }
            let frac = r - a as f64;
            if frac < 1e-15 {
                break;
            }
            r = 1.0 / frac;
        }
        if k1 == 0 || ((h1 as f64 / k1 as f64) / x - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("no rational ratio close to {x}")));
        }
        Ok(RationalRatio::new(h1, k1))
    }

    pub fn of_rates(out_rate: f64, in_rate: f64) -> Result<Self> {
        Self::approximate(out_rate / in_rate, 1_000_000)
    }

    /// `floor(n * num / den)` without rounding error.
    pub fn floor_mul(&self, n: usize) -> usize {
        ((n as u128 * self.num as u128) / self.den as u128) as usize
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Polyphase resampler by `ratio = out_rate / in_rate`. Inputs are read
/// circularly, i.e. as one period of a periodic signal.
#[derive(Debug, Clone)]
pub struct Resampler {
    ratio: RationalRatio,
    /// Kernel taps per output phase, for input offsets `first_offset..`.
    phases: Vec<Vec<f64>>,
    first_offset: i64,
}

impl Resampler {
    pub fn new(ratio: RationalRatio) -> Self {
        let up = ratio.num as usize;
        let down = ratio.den;
        let bandwidth = CUTOFF * (ratio.num as f64 / down as f64).min(1.0);
        let half_width = ZERO_CROSSINGS / bandwidth;
        let reach = half_width.ceil() as i64;
        let i0_beta = bessel_i0(KAISER_BETA);
        let phases = (0..up)
            .map(|p| {
                let frac = p as f64 / up as f64;
                let mut taps: Vec<f64> = (-reach + 1..=reach)
                    .map(|j| {
                        let tau = frac - j as f64;
                        if tau.abs() >= half_width {
                            return 0.0;
                        }
                        let w = bessel_i0(KAISER_BETA * (1.0 - (tau / half_width).powi(2)).sqrt()) / i0_beta;
                        bandwidth * sinc(bandwidth * tau) * w
                    })
                    .collect();
                let sum: f64 = taps.iter().sum();
                taps.iter_mut().for_each(|t| *t /= sum);
                taps
            })
            .collect();
        Resampler { ratio, phases, first_offset: -reach + 1 }
    }

    pub fn from_rates(out_rate: f64, in_rate: f64) -> Result<Self> {
        Ok(Self::new(RationalRatio::of_rates(out_rate, in_rate)?))
    }

    pub fn ratio(&self) -> RationalRatio {
        self.ratio
    }

    /// First `count` output samples, starting at input sample 0.
    pub fn process(&self, input: &[f64], count: usize) -> Vec<f64> {
        if input.is_empty() {
            return vec![0.0; count];
        }
        let len = input.len() as i64;
        let up = self.ratio.num;
        let down = self.ratio.den;
        if up == 1 && down == 1 {
            return (0..count).map(|n| input[n % input.len()]).collect();
        }
        let mut out = Vec::with_capacity(count);
        for n in 0..count as u64 {
            let pos = n as u128 * down as u128;
            let base = (pos / up as u128) as i64;
            let phase = (pos % up as u128) as usize;
            let taps = &self.phases[phase];
            let start = base + self.first_offset;
            let acc = if start >= 0 && start + taps.len() as i64 <= len {
                let window = &input[start as usize..start as usize + taps.len()];
                window.iter().zip(taps).map(|(x, h)| x * h).sum()
            } else {
                taps.iter().enumerate().map(|(j, h)| input[(start + j as i64).rem_euclid(len) as usize] * h).sum()
            };
            out.push(acc);
        }
        out
    }
}
