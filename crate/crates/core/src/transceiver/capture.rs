//! Capture-block files: a little-endian `u32` header length, a JSON header
//! of that many bytes, then `length` little-endian `f32` samples.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::ElectricalWaveform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureHeader {
    pub rate: f64,
    pub length: usize,
    pub seed: u64,
}

pub fn write_capture<W: Write>(mut out: W, capture: &ElectricalWaveform, seed: u64) -> Result<()> {
    let header = CaptureHeader { rate: capture.rate, length: capture.samples.len(), seed };
    let json = serde_json::to_vec(&header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::InvalidSpec("header too long".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(capture.samples.len() * 4);
    for &s in &capture.samples {
        buf.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_capture<R: Read>(mut input: R) -> Result<(CaptureHeader, ElectricalWaveform)> {
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let header: CaptureHeader = serde_json::from_slice(&json)?;
    let mut data = vec![0u8; header.length * 4];
    input.read_exact(&mut data)?;
    let samples = data.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect();
    Ok((header.clone(), ElectricalWaveform::new(header.rate, samples)))
}
