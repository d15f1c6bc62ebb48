//! The two link experiments, the crosstalk sweep and the eye diagram.
//!
//! Everything upstream of the photodiode is periodic in one PRBS period, so
//! one period is pushed through mux, fiber and demux per block. The
//! receiver then tiles that period to the capture length starting at a
//! random offset, adds noise, detects, samples and synchronizes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{ber_stats, ChannelStatistics, RunStatistics};
use crate::channel::{add_optical_noise, draw_block_channel, propagate};
use crate::config::{
    RunConfig, FOUR_CHANNEL_SCOPE_RATE, FOUR_CHANNEL_SEQUENCES, SINGLE_CHANNEL_SCOPE_RATE, SINGLE_CHANNEL_SEQUENCES,
};
use crate::error::{Error, Result};
use crate::fec::{net_bit_rate, overhead, post_fec_bound, POST_FEC_TARGET};
use crate::modes::ModeBasis;
use crate::mux::{build_demux, build_mux, TransferMatrix};
use crate::seed::{self, tag};
use crate::transceiver::{
    decide_and_count, decorrelate_ports, eye_points, interpolate_to_bit_grid, ook_modulate, photodetect, prbs15,
    resample_sync, scope_sample, CaptureSpec, SequenceReport, SyncResult, SYNC_OVERSAMPLING,
};
use crate::waveform::{ElectricalWaveform, FieldWaveform};

/// Which transmitters are lit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SingleChannel,
    FourChannel,
}

impl Experiment {
    pub fn default_scope_rate(self) -> f64 {
        match self {
            Experiment::SingleChannel => SINGLE_CHANNEL_SCOPE_RATE,
            Experiment::FourChannel => FOUR_CHANNEL_SCOPE_RATE,
        }
    }

    pub fn default_sequences(self) -> usize {
        match self {
            Experiment::SingleChannel => SINGLE_CHANNEL_SEQUENCES,
            Experiment::FourChannel => FOUR_CHANNEL_SEQUENCES,
        }
    }

    /// Channel block of sequence `index` on channel `order`. Single-channel
    /// runs visit the groups one after another, so each group sees its own
    /// blocks; the four-channel run shares one block across channels.
    pub fn block_index(self, order: u32, index: usize) -> u64 {
        match self {
            Experiment::SingleChannel => (u64::from(order) << 32) | index as u64,
            Experiment::FourChannel => index as u64,
        }
    }
}

/// Transmitters, devices and references, built once per run.
#[derive(Debug, Clone)]
pub struct Link {
    pub config: RunConfig,
    pub basis: ModeBasis,
    pub capture: CaptureSpec,
    mux: TransferMatrix,
    demux: TransferMatrix,
    tx_fields: Vec<FieldWaveform>,
    references: Vec<Vec<u8>>,
    tx_mean_power: f64,
}

/// One received sequence of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    pub channel: u32,
    pub report: SequenceReport,
    pub sync: SyncResult,
    pub capture: ElectricalWaveform,
}

impl Link {
    pub fn new(config: &RunConfig, experiment: Experiment) -> Result<Self> {
        config.validate()?;
        let basis = config.basis()?;
        let tx = &config.tx;
        let bits = prbs15(tx.prbs_seed)?;
        let period = bits.len();
        let modulated = ook_modulate(&bits, tx);
        let tx_mean_power = modulated.mean_power();
        let tx_fields = decorrelate_ports(&modulated, tx);
        let references = tx
            .port_delay_bits
            .iter()
            .map(|&d| (0..period).map(|k| bits[(k + period - d % period) % period]).collect())
            .collect();
        Ok(Link {
            capture: config.capture.resolve(experiment.default_scope_rate()),
            mux: build_mux(&config.mux, &basis)?,
            demux: build_demux(&config.mux, &basis)?,
            basis,
            config: config.clone(),
            tx_fields,
            references,
            tx_mean_power,
        })
    }

    pub fn mux(&self) -> &TransferMatrix {
        &self.mux
    }

    pub fn demux(&self) -> &TransferMatrix {
        &self.demux
    }

    /// One PRBS period of the bits sent on mux port `port`.
    pub fn reference(&self, port: usize) -> &[u8] {
        &self.references[port]
    }

    fn port(&self, order: u32) -> Result<usize> {
        self.config.mux.port_for_group(order).ok_or_else(|| Error::TargetNotInBasis(format!("MG{order}")))
    }

    /// Demux output fields over one period for block `block`, with only the
    /// ports in `active` lit.
    pub fn received_fields(&self, block: u64, active: &[usize]) -> Result<Vec<FieldWaveform>> {
        let rate = self.config.tx.sample_rate();
        let len = self.tx_fields[0].len();
        let inputs: Vec<Vec<Complex64>> = (0..self.tx_fields.len())
            .map(|p| {
                if active.contains(&p) {
                    self.tx_fields[p].samples.clone()
                } else {
                    vec![Complex64::new(0.0, 0.0); len]
                }
            })
            .collect();
        let modes: Vec<FieldWaveform> =
            self.mux.apply_waveforms(&inputs)?.into_iter().map(|s| FieldWaveform::new(rate, s)).collect();
        let realization = draw_block_channel(&self.config.crosstalk, &self.config.fiber, &self.basis, block)?;
        let fiber_out: Vec<Vec<Complex64>> =
            propagate(&modes, &realization, &self.basis)?.into_iter().map(|w| w.samples).collect();
        Ok(self.demux.apply_waveforms(&fiber_out)?.into_iter().map(|s| FieldWaveform::new(rate, s)).collect())
    }

    /// Receiver of channel `order`: amplifier, photodiode, scope and sync.
    /// `period_field` is the demux port output over one period.
    pub fn receive(&self, period_field: &FieldWaveform, order: u32, block: u64, index: usize) -> Result<Reception> {
        let port = self.port(order)?;
        let cap = &self.capture;
        let master = self.config.master_seed;
        let power = period_field.mean_power();
        if !(power > 0.0) {
            return Err(Error::SyncFailure { peak: 0.0, threshold: crate::transceiver::SYNC_THRESHOLD });
        }
        // the amplifier restores the transmitted mean power
        let gain = (self.tx_mean_power / power).sqrt();
        let period = period_field.len();
        let needed = (cap.total_samples as f64 * period_field.rate / cap.scope_rate).ceil() as usize + 64;
        let start = seed::rng(master, &[tag::CAPTURE_OFFSET, u64::from(order), block]).random_range(0..period);
        let tiled: Vec<Complex64> = (0..needed).map(|n| period_field.samples[(start + n) % period] * gain).collect();
        let field = FieldWaveform::new(period_field.rate, tiled);
        let field = add_optical_noise(
            std::slice::from_ref(&field),
            self.config.osnr_db,
            seed::derive(master, &[tag::OPTICAL_NOISE, u64::from(order), block]),
        )
        .pop()
        .expect("one waveform in, one out");
        let electrical =
            photodetect(&field, cap, seed::derive(master, &[tag::ELECTRICAL_NOISE, u64::from(order), block]));
        drop(field);
        let capture = scope_sample(&electrical, cap)?;
        drop(electrical);
        let reference = self.reference(port);
        let sync = resample_sync(&capture, &self.config.tx, cap, reference)?;
        let expected: Vec<u8> = (0..sync.soft.len()).map(|j| reference[j % reference.len()]).collect();
        let report = decide_and_count(&sync.soft, &expected, index)?;
        Ok(Reception { channel: order, report, sync, capture })
    }

    /// Simulate sequence `index` of `experiment` for every configured channel
    /// in the order of `config.channels`.
    pub fn run_sequence(&self, experiment: Experiment, index: usize) -> Result<Vec<Reception>> {
        let channels = &self.config.channels;
        match experiment {
            Experiment::FourChannel => {
                let block = experiment.block_index(0, index);
                let active: Vec<usize> = (0..self.tx_fields.len()).collect();
                let fields = self.received_fields(block, &active)?;
                channels.iter().map(|&order| self.receive(&fields[self.port(order)?], order, block, index)).collect()
            }
            Experiment::SingleChannel => channels
                .iter()
                .map(|&order| {
                    let port = self.port(order)?;
                    let block = experiment.block_index(order, index);
                    let fields = self.received_fields(block, &[port])?;
                    self.receive(&fields[port], order, block, index)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSummary {
    pub channel: String,
    pub sequences: usize,
    pub bits: usize,
    pub errors: usize,
    pub average_ber: f64,
    pub min_ber: f64,
    pub max_ber: f64,
    /// Mean Q-factor of the soft values, `None` for a noise-free eye.
    pub mean_q: Option<f64>,
    /// Codeword-failure bound at the worst sequence BER.
    pub post_fec_bound: f64,
    pub fec_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FecSummary {
    pub n: u32,
    pub k: u32,
    pub b: u32,
    pub t: u32,
    pub overhead: f64,
    pub target: f64,
    pub gross_bit_rate: f64,
    pub net_bit_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub scope_rate: f64,
    pub sequences: usize,
    pub channels: Vec<ChannelSummary>,
    pub fec: FecSummary,
    pub fec_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub statistics: RunStatistics,
    pub summary: Summary,
}

impl RunOutput {
    /// `sequences.csv`, `histogram.csv` and `summary.json` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut seq = BufWriter::new(File::create(dir.join("sequences.csv"))?);
        self.statistics.write_sequences_csv(&mut seq)?;
        seq.flush()?;
        let mut hist = BufWriter::new(File::create(dir.join("histogram.csv"))?);
        self.statistics.write_histogram_csv(&mut hist)?;
        hist.flush()?;
        let mut json = serde_json::to_string_pretty(&self.summary)?;
        json.push('\n');
        std::fs::write(dir.join("summary.json"), json)?;
        Ok(())
    }
}

fn summarize_channel(stats: &ChannelStatistics, config: &RunConfig) -> Result<ChannelSummary> {
    let bits: usize = stats.reports.iter().map(|r| r.bits_compared).sum();
    let errors: usize = stats.reports.iter().map(|r| r.error_count).sum();
    let min_ber = stats.ber_trace.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ber = stats.ber_trace.iter().copied().fold(0.0, f64::max);
    let finite_q: Vec<f64> = stats.reports.iter().map(|r| r.q_factor).filter(|q| q.is_finite()).collect();
    let mean_q = (!finite_q.is_empty()).then(|| finite_q.iter().sum::<f64>() / finite_q.len() as f64);
    let bound = post_fec_bound(max_ber.min(0.5), &config.fec)?;
    Ok(ChannelSummary {
        channel: format!("MG{}", stats.channel),
        sequences: stats.reports.len(),
        bits,
        errors,
        average_ber: stats.average_ber,
        min_ber,
        max_ber,
        mean_q,
        post_fec_bound: bound,
        fec_pass: bound < POST_FEC_TARGET,
    })
}

fn run(config: &RunConfig, experiment: Experiment) -> Result<RunOutput> {
    let link = Link::new(config, experiment)?;
    let sequences = config.sequences.unwrap_or(experiment.default_sequences());
    let per_sequence: Vec<Vec<SequenceReport>> = (0..sequences)
        .into_par_iter()
        .map(|i| link.run_sequence(experiment, i).map(|rx| rx.into_iter().map(|r| r.report).collect()))
        .collect::<Result<_>>()?;
    let channels = config
        .channels
        .iter()
        .enumerate()
        .map(|(c, &order)| ber_stats(order, per_sequence.iter().map(|s| s[c].clone()).collect()))
        .collect::<Result<Vec<_>>>()?;
    let statistics = RunStatistics { channels };
    let channel_summaries =
        statistics.channels.iter().map(|c| summarize_channel(c, config)).collect::<Result<Vec<_>>>()?;
    let oh = overhead(&config.fec)?;
    let lanes = config.channels.len() as u32;
    let fec = FecSummary {
        n: config.fec.n,
        k: config.fec.k,
        b: config.fec.b,
        t: config.fec.t(),
        overhead: oh,
        target: POST_FEC_TARGET,
        gross_bit_rate: net_bit_rate(lanes, config.tx.bit_rate, 0.0),
        net_bit_rate: net_bit_rate(lanes, config.tx.bit_rate, oh),
    };
    let summary = Summary {
        experiment,
        scope_rate: link.capture.scope_rate,
        sequences,
        fec_pass: channel_summaries.iter().all(|c| c.fec_pass),
        channels: channel_summaries,
        fec,
    };
    Ok(RunOutput { statistics, summary })
}

/// Each configured group in turn, the other transmitters dark.
pub fn run_single_channel(config: &RunConfig) -> Result<RunOutput> {
    run(config, Experiment::SingleChannel)
}

/// All transmitters lit, all channels received in parallel.
pub fn run_four_channel(config: &RunConfig) -> Result<RunOutput> {
    run(config, Experiment::FourChannel)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub xt_db: f64,
    pub channel: u32,
    pub average_ber: f64,
}

/// Four-channel runs at every crosstalk level of `grid`. Seeds do not
/// depend on the grid, so shared points of two grids agree exactly.
pub fn sweep_crosstalk(config: &RunConfig, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut points = Vec::new();
    for &xt in grid {
        let mut c = config.clone();
        c.crosstalk.xt_db = xt;
        let out = run_four_channel(&c)?;
        points.extend(out.statistics.channels.iter().map(|s| SweepPoint {
            xt_db: xt,
            channel: s.channel,
            average_ber: s.average_ber,
        }));
    }
    Ok(points)
}

/// `xt_db,channel,average_ber`
pub fn write_sweep_csv<W: Write>(mut out: W, points: &[SweepPoint]) -> Result<()> {
    writeln!(out, "xt_db,channel,average_ber")?;
    for p in points {
        writeln!(out, "{},MG{},{}", p.xt_db, p.channel, p.average_ber)?;
    }
    Ok(())
}

/// Eye of one received sequence, folded over two bits at the sampling phase
/// picked by the synchronizer.
pub fn eye_diagram(
    config: &RunConfig,
    experiment: Experiment,
    channel: u32,
    sequence: usize,
    max_bits: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut c = config.clone();
    c.channels = vec![channel];
    c.validate()?;
    let link = Link::new(&c, experiment)?;
    let rx = link.run_sequence(experiment, sequence)?.pop().expect("one channel");
    let grid = interpolate_to_bit_grid(&rx.capture, &c.tx, SYNC_OVERSAMPLING)?;
    let start = rx.sync.start_bit * SYNC_OVERSAMPLING;
    Ok(eye_points(&grid[start..], SYNC_OVERSAMPLING, rx.sync.phase, max_bits))
}
