use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one captured sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub sequence_index: usize,
    pub bits_compared: usize,
    pub error_count: usize,
    /// Sorted, unique bit indices of the errors.
    pub error_positions: Vec<usize>,
    pub ber: f64,
    /// `(mu1 - mu0) / (sigma1 + sigma0)` of the soft values, split by the
    /// transmitted bit.
    pub q_factor: f64,
}

/// Midpoint between the means of the lower and upper halves of the sorted
/// values.
pub fn two_cluster_threshold(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    let half = v.len() / 2;
    if half == 0 {
        return v[0];
    }
    v.select_nth_unstable_by(half, f64::total_cmp);
    let lower = v[..half].iter().sum::<f64>() / half as f64;
    let upper = v[half..].iter().sum::<f64>() / (v.len() - half) as f64;
    0.5 * (lower + upper)
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut sum, mut sq) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        sum += v;
        sq += v * v;
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    (mean, (sq / n as f64 - mean * mean).max(0.0).sqrt())
}

/// Hard decisions against the two-cluster threshold, compared bit by bit
/// with the reference.
pub fn decide_and_count(soft: &[f64], reference: &[u8], sequence_index: usize) -> Result<SequenceReport> {
    if soft.len() != reference.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), got: soft.len() });
    }
    let threshold = two_cluster_threshold(soft);
    let error_positions: Vec<usize> = soft
        .iter()
        .zip(reference)
        .enumerate()
        .filter(|(_, (v, &b))| (**v > threshold) != (b != 0))
        .map(|(i, _)| i)
        .collect();
    let bits = soft.len();
    let (m1, s1) = mean_std(soft.iter().zip(reference).filter(|(_, &b)| b != 0).map(|(v, _)| *v));
    let (m0, s0) = mean_std(soft.iter().zip(reference).filter(|(_, &b)| b == 0).map(|(v, _)| *v));
    let q_factor = if s0 + s1 > 0.0 { (m1 - m0) / (s0 + s1) } else { f64::INFINITY };
    Ok(SequenceReport {
        sequence_index,
        bits_compared: bits,
        error_count: error_positions.len(),
        ber: if bits == 0 { 0.0 } else { error_positions.len() as f64 / bits as f64 },
        error_positions,
        q_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences_have_no_errors() {
        let bits = [1u8, 0, 0, 1, 1, 0, 1, 0];
        let soft: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
        let r = decide_and_count(&soft, &bits, 3).unwrap();
        assert_eq!(r.error_count, 0);
        assert_eq!(r.ber, 0.0);
        assert_eq!(r.sequence_index, 3);
    }

    #[test]
    fn ber_arithmetic() {
        let bits = 688_107usize;
        assert!((674.0 / bits as f64 - 9.79e-4).abs() < 5e-7);
        assert!((1.0 / bits as f64 - 1.45e-6).abs() < 5e-9);
        let reference: Vec<u8> = (0..bits).map(|i| (i % 3 == 0) as u8).collect();
        let mut soft: Vec<f64> = reference.iter().map(|&b| f64::from(b)).collect();
        for k in 0..674 {
            let i = k * 1000 + 7;
            soft[i] = 1.0 - soft[i];
        }
        let r = decide_and_count(&soft, &reference, 0).unwrap();
        assert_eq!(r.error_count, 674);
        assert!((r.ber - 674.0 / 688_107.0).abs() < 1e-18);
        assert!(r.error_positions.windows(2).all(|w| w[0] < w[1]));
        assert!(r.error_positions.iter().all(|&p| p < bits));
    }

    #[test]
    fn threshold_sits_between_clusters() {
        let v = [0.1, 0.12, 0.09, 0.95, 1.02, 0.98];
        let t = two_cluster_threshold(&v);
        assert!((t - 0.5 * (0.31 / 3.0 + 2.95 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(decide_and_count(&[0.0; 3], &[0; 4], 0).is_err());
    }
}
