use num_complex::Complex64;

/// Uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    /// Sample rate [samples/s].
    pub rate: f64,
    pub samples: Vec<T>,
}

/// Complex optical field envelope, `|E|^2` in units of the unit mark power.
pub type FieldWaveform = Waveform<Complex64>;

/// Real electrical signal.
pub type ElectricalWaveform = Waveform<f64>;

impl<T> Waveform<T> {
    pub fn new(rate: f64, samples: Vec<T>) -> Self {
        Waveform { rate, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }
}

impl FieldWaveform {
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(mut self, gain: f64) -> Self {
        self.samples.iter_mut().for_each(|s| *s *= gain);
        self
    }
}
