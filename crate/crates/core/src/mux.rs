//! Spatial 4:1 multiplexer and 1:4 de-multiplexer as transfer matrices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::db;
use crate::error::{Error, Result};
use crate::modes::{LpMode, ModeBasis};
use crate::seed::{self, tag};

/// Default suppression of each non-target mode [dB].
pub const DEFAULT_SELECTIVITY_DB: f64 = 35.0;

/// Number of single-mode ports of the devices.
pub const PORTS: usize = 4;

/// Port-to-mode assignment and imperfections shared by mux and demux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuxSpec {
    /// Target mode of each port, one per distinct mode group.
    pub ports: Vec<LpMode>,
    /// Suppression of every non-target mode [dB], may be infinite.
    #[serde(with = "db")]
    pub selectivity_db: f64,
    /// Per-port loss [dB].
    pub insertion_loss_db: f64,
    /// Seed of the leakage phases.
    pub seed: u64,
}

impl Default for MuxSpec {
    fn default() -> Self {
        MuxSpec {
            ports: ["LP01", "LP11a", "LP02", "LP31a"].iter().map(|s| s.parse().expect("valid label")).collect(),
            selectivity_db: DEFAULT_SELECTIVITY_DB,
            insertion_loss_db: 5.0,
            seed: 0x4d55_5801,
        }
    }
}

impl MuxSpec {
    /// An ideal device: no leakage, no loss.
    pub fn ideal(ports: Vec<LpMode>) -> Self {
        MuxSpec { ports, selectivity_db: f64::INFINITY, insertion_loss_db: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.selectivity_db.is_nan() || self.selectivity_db < 0.0 {
            return Err(Error::InvalidSelectivity(self.selectivity_db));
        }
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(Error::InvalidSpec("mux.insertion_loss_db must be >= 0".into()));
        }
        if self.ports.is_empty() {
            return Err(Error::InvalidSpec("mux.ports must not be empty".into()));
        }
        let mut groups: Vec<u32> = self.ports.iter().map(LpMode::group_order).collect();
        groups.sort_unstable();
        groups.dedup();
        if groups.len() != self.ports.len() {
            return Err(Error::InvalidSpec("mux.ports must lie in distinct mode groups".into()));
        }
        Ok(())
    }

    /// Port whose target lies in mode group `order`.
    pub fn port_for_group(&self, order: u32) -> Option<usize> {
        self.ports.iter().position(|m| m.group_order() == order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Port(usize),
    Mode(LpMode),
}

/// Complex linear map between labelled spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    matrix: DMatrix<Complex64>,
    inputs: Vec<Label>,
    outputs: Vec<Label>,
}

impl TransferMatrix {
    pub fn new(matrix: DMatrix<Complex64>, inputs: Vec<Label>, outputs: Vec<Label>) -> Result<Self> {
        if matrix.ncols() != inputs.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), got: matrix.ncols() });
        }
        if matrix.nrows() != outputs.len() {
            return Err(Error::DimensionMismatch { expected: outputs.len(), got: matrix.nrows() });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSpec("transfer matrix entries must be finite".into()));
        }
        Ok(TransferMatrix { matrix, inputs, outputs })
    }

    pub fn identity(labels: Vec<Label>) -> Self {
        let n = labels.len();
        TransferMatrix { matrix: DMatrix::identity(n, n), inputs: labels.clone(), outputs: labels }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn inputs(&self) -> &[Label] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Label] {
        &self.outputs
    }

    pub fn largest_singular_value(&self) -> f64 {
        self.matrix.singular_values().iter().copied().fold(0.0, f64::max)
    }

    /// `self * inner`: apply `inner` first.
    pub fn compose(&self, inner: &TransferMatrix) -> Result<TransferMatrix> {
        if self.inputs != inner.outputs {
            return Err(Error::DimensionMismatch { expected: self.inputs.len(), got: inner.outputs.len() });
        }
        Ok(TransferMatrix {
            matrix: &self.matrix * &inner.matrix,
            inputs: inner.inputs.clone(),
            outputs: self.outputs.clone(),
        })
    }

    pub fn adjoint(&self) -> TransferMatrix {
        TransferMatrix { matrix: self.matrix.adjoint(), inputs: self.outputs.clone(), outputs: self.inputs.clone() }
    }

    /// Apply sample-wise to one waveform per input.
    pub fn apply_waveforms(&self, inputs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch { expected: self.inputs.len(), got: inputs.len() });
        }
        let len = inputs.first().map_or(0, Vec::len);
        if let Some(bad) = inputs.iter().find(|w| w.len() != len) {
            return Err(Error::DimensionMismatch { expected: len, got: bad.len() });
        }
        let mut out = vec![vec![Complex64::new(0.0, 0.0); len]; self.outputs.len()];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, input) in inputs.iter().enumerate() {
                let h = self.matrix[(r, c)];
                if h == Complex64::new(0.0, 0.0) {
                    continue;
                }
                row.iter_mut().zip(input).for_each(|(o, x)| *o += h * x);
            }
        }
        Ok(out)
    }
}

/// Complex amplitude per basis mode (or per port); power is `sum |c|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector(pub Vec<Complex64>);

impl ModeVector {
    pub fn zeros(n: usize) -> Self {
        ModeVector(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn power(&self) -> f64 {
        self.0.iter().map(Complex64::norm_sqr).sum()
    }
}

pub fn apply_transfer(t: &TransferMatrix, v: &ModeVector) -> Result<ModeVector> {
    if v.0.len() != t.inputs.len() {
        return Err(Error::DimensionMismatch { expected: t.inputs.len(), got: v.0.len() });
    }
    if v.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidSpec("mode vector entries must be finite".into()));
    }
    let out = &t.matrix * DVector::from_column_slice(&v.0);
    Ok(ModeVector(out.iter().copied().collect()))
}

fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(-db / 20.0)
}

fn build_ports_to_modes(spec: &MuxSpec, basis: &ModeBasis, stream: u64) -> Result<TransferMatrix> {
    spec.validate()?;
    let targets = spec
        .ports
        .iter()
        .map(|m| basis.index_of(m).ok_or_else(|| Error::TargetNotInBasis(m.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let n = basis.len();
    let gain = db_to_amplitude(spec.insertion_loss_db);
    let leak = gain * db_to_amplitude(spec.selectivity_db);
    let mut rng = seed::rng(spec.seed, &[stream]);
    let mut matrix = DMatrix::zeros(n, spec.ports.len());
    for (col, &target) in targets.iter().enumerate() {
        for row in 0..n {
            // the phase is drawn for every entry so the stream layout does
            // not depend on the selectivity value
            let theta = rng.random::<f64>() * 2.0 * PI;
            matrix[(row, col)] = if row == target {
                Complex64::new(gain, 0.0)
            } else if leak > 0.0 {
                Complex64::from_polar(leak, theta)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let power: f64 = matrix.column(col).iter().map(Complex64::norm_sqr).sum();
        if power > 1.0 {
            let scale = power.sqrt().recip();
            matrix.column_mut(col).iter_mut().for_each(|z| *z *= scale);
        }
    }
    let inputs = (0..spec.ports.len()).map(Label::Port).collect();
    let outputs = basis.modes().iter().copied().map(Label::Mode).collect();
    let mut t = TransferMatrix::new(matrix, inputs, outputs)?;
    // unit columns that overlap through leakage can still exceed unit gain
    let sigma = t.largest_singular_value();
    if sigma > 1.0 {
        t.matrix /= Complex64::new(sigma, 0.0);
    }
    Ok(t)
}

/// Multiplexer: ports in, basis modes out.
pub fn build_mux(spec: &MuxSpec, basis: &ModeBasis) -> Result<TransferMatrix> {
    build_ports_to_modes(spec, basis, tag::MUX_PHASE)
}

/// De-multiplexer with SMF modal filters: basis modes in, ports out. Each
/// port projects onto its selected mode plus leakage.
pub fn build_demux(spec: &MuxSpec, basis: &ModeBasis) -> Result<TransferMatrix> {
    Ok(build_ports_to_modes(spec, basis, tag::DEMUX_PHASE)?.adjoint())
}
