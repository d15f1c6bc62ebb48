use std::f64::consts::PI;

use num_complex::Complex64;

use super::TxSpec;
use crate::waveform::FieldWaveform;

/// NRZ OOK field: amplitude `sqrt(P1)` for ones and `sqrt(P0)` for zeros,
/// raised-cosine edges centred on the bit boundaries, constant optical
/// phase. The bit sequence is treated as periodic, so the edge into the
/// first bit comes from the last bit.
pub fn ook_modulate(bits: &[u8], tx: &TxSpec) -> FieldWaveform {
    let spb = tx.samples_per_bit;
    let high = tx.mark_power().sqrt();
    let low = tx.space_power().sqrt();
    let level = |b: u8| if b != 0 { high } else { low };
    let n = bits.len();
    let rise = tx.rise_time_bits;
    let mut samples = Vec::with_capacity(n * spb);
    for (k, &bit) in bits.iter().enumerate() {
        let cur = level(bit);
        let prev = level(bits[(k + n - 1) % n]);
        let next = level(bits[(k + 1) % n]);
        for j in 0..spb {
            // time within the bit, in bits
            let t = j as f64 / spb as f64;
            let amp = if rise > 0.0 && t < rise / 2.0 {
                // second half of the edge from the previous bit
                let x = (t + rise / 2.0) / rise;
                prev + (cur - prev) * 0.5 * (1.0 - (PI * x).cos())
            } else if rise > 0.0 && t > 1.0 - rise / 2.0 {
                let x = (t - (1.0 - rise / 2.0)) / rise;
                cur + (next - cur) * 0.5 * (1.0 - (PI * x).cos())
            } else {
                cur
            };
            samples.push(Complex64::new(amp, 0.0));
        }
    }
    FieldWaveform::new(tx.sample_rate(), samples)
}

/// Copies delayed circularly by `port_delay_bits[i]` bits.
pub fn decorrelate_ports(field: &FieldWaveform, tx: &TxSpec) -> Vec<FieldWaveform> {
    let len = field.samples.len();
    tx.port_delay_bits
        .iter()
        .map(|&d| {
            let mut s = field.samples.clone();
            if len > 0 {
                s.rotate_right((d * tx.samples_per_bit) % len);
            }
            FieldWaveform::new(field.rate, s)
        })
        .collect()
}
