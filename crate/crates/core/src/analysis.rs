//! Per-sequence and cross-sequence BER statistics.

use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::transceiver::SequenceReport;

/// Bins used by the runners; with the `5 * bins` rule every sequence with
/// at least 50 errors gets a p-value.
pub const UNIFORMITY_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Uniformity {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of the error positions against a uniform
/// spread over `bins` equal intervals of the compared bits.
pub fn uniformity_test(report: &SequenceReport, bins: usize) -> Result<Uniformity> {
    let errors = report.error_count;
    if bins < 2 || errors < 5 * bins || report.bits_compared < bins {
        return Err(Error::NotApplicable { errors, bins });
    }
    let bits = report.bits_compared;
    let mut counts = vec![0usize; bins];
    for &p in &report.error_positions {
        counts[(p as u128 * bins as u128 / bits as u128) as usize] += 1;
    }
    // bin b holds positions p with floor(p * bins / bits) == b
    let edge = |b: usize| (b as u128 * bits as u128).div_ceil(bins as u128) as usize;
    let statistic = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let expected = errors as f64 * (edge(b + 1) - edge(b)) as f64 / bits as f64;
            (c as f64 - expected).powi(2) / expected
        })
        .sum::<f64>();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    Ok(Uniformity { statistic, degrees_of_freedom: dof, p_value: dist.sf(statistic) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Histogram edges: a zero-error bin, an underflow bin `(0, 1e-8)`, two
/// bins per decade over `[1e-8, 1e-2)`, and an overflow bin `[1e-2, 1]`.
pub fn ber_histogram(bers: &[f64]) -> Vec<HistogramBin> {
    let mut edges = vec![0.0];
    for decade in -8..=-2 {
        let low: f64 = format!("1e{decade}").parse().expect("decimal literal");
        edges.push(low);
        if decade < -2 {
            edges.push(low * 10f64.sqrt());
        }
    }
    edges.push(1.0);
    let mut bins = vec![HistogramBin { low: 0.0, high: 0.0, count: 0 }];
    bins.extend(edges.windows(2).map(|w| HistogramBin { low: w[0], high: w[1], count: 0 }));
    for &b in bers {
        let idx = if b == 0.0 {
            0
        } else {
            // last bin whose lower edge is <= b
            1 + edges[1..edges.len() - 1].iter().take_while(|&&e| e <= b).count()
        };
        bins[idx].count += 1;
    }
    bins
}

/// Statistics of one channel over all its sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStatistics {
    /// Mode-group order of the channel.
    pub channel: u32,
    pub reports: Vec<SequenceReport>,
    /// BER per sequence, ordered by sequence index.
    pub ber_trace: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
    /// Total errors over total bits.
    pub average_ber: f64,
    /// Uniformity p-value per sequence, `None` where not applicable.
    pub uniformity_p: Vec<Option<f64>>,
}

pub fn ber_stats(channel: u32, mut reports: Vec<SequenceReport>) -> Result<ChannelStatistics> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    reports.sort_by_key(|r| r.sequence_index);
    let ber_trace: Vec<f64> = reports.iter().map(|r| r.ber).collect();
    let errors: usize = reports.iter().map(|r| r.error_count).sum();
    let bits: usize = reports.iter().map(|r| r.bits_compared).sum();
    let uniformity_p = reports.iter().map(|r| uniformity_test(r, UNIFORMITY_BINS).ok().map(|u| u.p_value)).collect();
    Ok(ChannelStatistics {
        channel,
        histogram: ber_histogram(&ber_trace),
        ber_trace,
        average_ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
        uniformity_p,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStatistics {
    pub channels: Vec<ChannelStatistics>,
}

impl RunStatistics {
    pub fn channel(&self, order: u32) -> Option<&ChannelStatistics> {
        self.channels.iter().find(|c| c.channel == order)
    }

    /// `channel,sequence_index,bits,errors,ber,uniformity_p`
    pub fn write_sequences_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "channel,sequence_index,bits,errors,ber,uniformity_p")?;
        for c in &self.channels {
            for (r, p) in c.reports.iter().zip(&c.uniformity_p) {
                let p = p.map_or_else(|| "NA".to_string(), |p| p.to_string());
                writeln!(
                    out,
                    "MG{},{},{},{},{},{}",
                    c.channel, r.sequence_index, r.bits_compared, r.error_count, r.ber, p
                )?;
            }
        }
        Ok(())
    }

    /// `channel,bin_low,bin_high,count`
    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "channel,bin_low,bin_high,count")?;
        for c in &self.channels {
            for b in &c.histogram {
                writeln!(out, "MG{},{},{},{}", c.channel, b.low, b.high, b.count)?;
            }
        }
        Ok(())
    }
}
