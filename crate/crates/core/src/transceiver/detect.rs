use rand::Rng;
use rand_distr::StandardNormal;

use super::resample::Resampler;
use super::CaptureSpec;
use crate::error::Result;
use crate::seed::{self, tag};
use crate::waveform::{ElectricalWaveform, FieldWaveform};

/// Square-law detection plus additive Gaussian receiver noise. The optical
/// phase is lost: only `|E|^2` reaches the output.
pub fn photodetect(field: &FieldWaveform, cap: &CaptureSpec, seed: u64) -> ElectricalWaveform {
    let sigma = cap.electrical_noise_sigma;
    let samples = if sigma > 0.0 {
        let mut rng = seed::rng(seed, &[tag::ELECTRICAL_NOISE]);
        field.samples.iter().map(|e| e.norm_sqr() + sigma * rng.sample::<f64, _>(StandardNormal)).collect()
    } else {
        field.samples.iter().map(|e| e.norm_sqr()).collect()
    };
    ElectricalWaveform::new(field.rate, samples)
}

/// Exactly `total_samples` samples at the scope rate, by band-limited
/// rational resampling. A source shorter than the capture is read as one
/// period of a periodic signal.
pub fn scope_sample(signal: &ElectricalWaveform, cap: &CaptureSpec) -> Result<ElectricalWaveform> {
    cap.validate()?;
    let resampler = Resampler::from_rates(cap.scope_rate, signal.rate)?;
    let samples = resampler.process(&signal.samples, cap.total_samples);
    Ok(ElectricalWaveform::new(cap.scope_rate, samples))
}
