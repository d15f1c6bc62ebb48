//! Reed-Solomon overhead and post-FEC error bound.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// Target the post-FEC bound is checked against.
pub const POST_FEC_TARGET: f64 = 1e-12;

/// RS(n, k) over `b`-bit symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FecSpec {
    pub n: u32,
    pub k: u32,
    pub b: u32,
}

impl Default for FecSpec {
    /// RS(1023, 911) over 10-bit symbols: 12.29 % overhead, t = 56.
    fn default() -> Self {
        FecSpec { n: 1023, k: 911, b: 10 }
    }
}

impl FecSpec {
    pub fn new(n: u32, k: u32, b: u32) -> Result<Self> {
        let spec = FecSpec { n, k, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let max_n = if self.b >= 32 { u64::MAX } else { (1u64 << self.b) - 1 };
        if self.b == 0 || self.k == 0 || self.k >= self.n || u64::from(self.n) > max_n {
            return Err(Error::InvalidSpec(format!(
                "RS({}, {}) over {}-bit symbols needs 0 < k < n <= 2^b - 1",
                self.n, self.k, self.b
            )));
        }
        if self.t() < 1 {
            return Err(Error::InvalidSpec("RS code must correct at least one symbol".into()));
        }
        Ok(())
    }

    /// Correctable symbol errors per codeword.
    pub fn t(&self) -> u32 {
        (self.n - self.k) / 2
    }
}

/// `(n - k) / k`.
pub fn overhead(spec: &FecSpec) -> Result<f64> {
    spec.validate()?;
    Ok(f64::from(spec.n - spec.k) / f64::from(spec.k))
}

/// Symbol error probability for independent bit errors.
pub fn symbol_error_probability(pre_ber: f64, bits_per_symbol: u32) -> f64 {
    -(f64::from(bits_per_symbol) * (-pre_ber).ln_1p()).exp_m1()
}

/// `sum_{i=t+1}^{n} C(n,i) p^i (1-p)^(n-i)` evaluated in the log domain.
pub fn binomial_upper_tail(n: u32, t: u32, p: f64) -> f64 {
    if p <= 0.0 || t >= n {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let logs: Vec<f64> = (t + 1..=n)
        .map(|i| ln_binomial(u64::from(n), u64::from(i)) + f64::from(i) * ln_p + f64::from(n - i) * ln_q)
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

/// Upper bound on the post-FEC BER: the probability that a codeword holds
/// more than `t` symbol errors, with memoryless bit errors.
pub fn post_fec_bound(pre_ber: f64, spec: &FecSpec) -> Result<f64> {
    if !(0.0..=0.5).contains(&pre_ber) {
        return Err(Error::OutOfRange(pre_ber));
    }
    spec.validate()?;
    let ps = symbol_error_probability(pre_ber, spec.b);
    Ok(binomial_upper_tail(spec.n, spec.t(), ps))
}

/// Net payload rate `lanes * lane_rate / (1 + overhead)`, rounded to whole
/// bits per second.
pub fn net_bit_rate(lanes: u32, lane_rate: f64, overhead: f64) -> f64 {
    (f64::from(lanes) * lane_rate / (1.0 + overhead)).round()
}
