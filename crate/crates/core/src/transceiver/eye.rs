use std::io::Write;

use crate::error::Result;

/// Fold an interpolated bit-grid waveform modulo two bit periods. The
/// chosen sampling phase lands at 0.5 and 1.5 bits.
pub fn eye_points(grid: &[f64], oversampling: usize, sampling_phase: usize, max_bits: usize) -> Vec<(f64, f64)> {
    let span = 2 * oversampling;
    // shift so that index `sampling_phase` maps to half a bit
    let shift = (oversampling / 2 + span - sampling_phase % oversampling) % span;
    grid.iter()
        .take(max_bits * oversampling)
        .enumerate()
        .map(|(n, &v)| (((n + shift) % span) as f64 / oversampling as f64, v))
        .collect()
}

pub fn write_eye_csv<W: Write>(mut out: W, points: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "phase_in_bits,amplitude")?;
    for (p, a) in points {
        writeln!(out, "{p},{a}")?;
    }
    Ok(())
}
