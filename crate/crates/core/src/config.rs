//! Run configuration: one JSON document with the field names below.

use serde::{Deserialize, Serialize};

use crate::channel::CrosstalkSpec;
use crate::db;
use crate::error::Error;
use crate::fec::FecSpec;
use crate::modes::{FiberSpec, ModeBasis};
use crate::mux::MuxSpec;
use crate::transceiver::{CaptureSpec, TxSpec, DEFAULT_TOTAL_SAMPLES};

pub const SINGLE_CHANNEL_SCOPE_RATE: f64 = 80e9;
pub const FOUR_CHANNEL_SCOPE_RATE: f64 = 40e9;
pub const SINGLE_CHANNEL_SEQUENCES: usize = 20;
pub const FOUR_CHANNEL_SEQUENCES: usize = 30;

/// Receiver noise of the default configuration, relative to the unit mark
/// level (Q of about 8 on a clean eye).
pub const DEFAULT_NOISE_SIGMA: f64 = 0.06;

/// Capture settings; the scope rate falls back to the experiment default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaptureConfig {
    pub scope_rate: Option<f64>,
    pub total_samples: usize,
    pub electrical_noise_sigma: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        CaptureConfig {
            scope_rate: None,
            total_samples: DEFAULT_TOTAL_SAMPLES,
            electrical_noise_sigma: DEFAULT_NOISE_SIGMA,
        }
    }
}

impl CaptureConfig {
    pub fn resolve(&self, default_rate: f64) -> CaptureSpec {
        CaptureSpec {
            scope_rate: self.scope_rate.unwrap_or(default_rate),
            total_samples: self.total_samples,
            electrical_noise_sigma: self.electrical_noise_sigma,
        }
    }
}

fn default_osnr() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub fiber: FiberSpec,
    pub mux: MuxSpec,
    pub crosstalk: CrosstalkSpec,
    pub tx: TxSpec,
    pub capture: CaptureConfig,
    pub fec: FecSpec,
    /// Mode-group orders used as channels.
    pub channels: Vec<u32>,
    /// Falls back to 20 (single channel) or 30 (four channels).
    pub sequences: Option<usize>,
    pub master_seed: u64,
    /// OSNR of the receiver amplifiers [dB]; `inf` disables optical noise.
    #[serde(with = "db", default = "default_osnr")]
    pub osnr_db: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fiber: FiberSpec::default(),
            mux: MuxSpec::default(),
            crosstalk: CrosstalkSpec::default(),
            tx: TxSpec::default(),
            capture: CaptureConfig::default(),
            fec: FecSpec::default(),
            channels: vec![3, 4, 5, 6],
            sequences: None,
            master_seed: 2014,
            osnr_db: default_osnr(),
        }
    }
}

/// A config problem, located by JSON path and (when found) source line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.to_string())
    }
}

fn issue(path: &str, err: impl std::fmt::Display) -> ConfigError {
    ConfigError { path: path.to_string(), line: None, message: err.to_string() }
}

/// Narrow a section-level error to the offending field where the message
/// names it, e.g. `fiber.delta must ...`.
fn field_issue(section: &str, err: Error) -> ConfigError {
    match &err {
        Error::InvalidSpec(msg) if msg.starts_with(&format!("{section}.")) => {
            let end = msg.find([' ', ':']).unwrap_or(msg.len());
            issue(&msg[..end], msg[end..].trim_start_matches(':').trim())
        }
        Error::InvalidSelectivity(_) => issue("mux.selectivity_db", err),
        Error::ZeroSeed => issue("tx.prbs_seed", err),
        _ => issue(section, err),
    }
}

/// Line (1-based) of the innermost key of `path`, searching for each key
/// after the line of its parent.
fn locate(text: &str, path: &str) -> Option<usize> {
    let lines: Vec<&str> = text.lines().collect();
    let mut from = 0;
    let mut found = None;
    for key in path.split('.') {
        let needle = format!("\"{key}\"");
        let at = lines.iter().skip(from).position(|l| l.contains(&needle))? + from;
        found = Some(at + 1);
        from = at;
    }
    found
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            path: "$".into(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        config.validate().map_err(|mut e| {
            e.line = locate(text, &e.path);
            e
        })?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.fiber.validate().map_err(|e| field_issue("fiber", e))?;
        self.mux.validate().map_err(|e| field_issue("mux", e))?;
        self.crosstalk.validate().map_err(|e| field_issue("crosstalk", e))?;
        self.tx.validate().map_err(|e| field_issue("tx", e))?;
        self.capture.resolve(FOUR_CHANNEL_SCOPE_RATE).validate().map_err(|e| field_issue("capture", e))?;
        self.fec.validate().map_err(|e| field_issue("fec", e))?;
        if self.tx.port_delay_bits.len() != self.mux.ports.len() {
            return Err(issue("tx.port_delay_bits", "needs one delay per mux port"));
        }
        if self.channels.is_empty() {
            return Err(issue("channels", "at least one channel is required"));
        }
        let mut seen = Vec::new();
        for &c in &self.channels {
            if c < 3 {
                return Err(issue("channels", format!("mode group {c} is below 3")));
            }
            if seen.contains(&c) {
                return Err(issue("channels", format!("mode group {c} listed twice")));
            }
            seen.push(c);
            if self.mux.port_for_group(c).is_none() {
                return Err(issue("channels", format!("no mux port targets mode group {c}")));
            }
        }
        if self.sequences == Some(0) {
            return Err(issue("sequences", "must be positive"));
        }
        if self.osnr_db.is_nan() {
            return Err(issue("osnr_db", "must be a number"));
        }
        self.basis().map_err(|e| issue("fiber", e))?;
        Ok(())
    }

    /// Basis of the mode groups the mux ports address, in port order.
    pub fn basis(&self) -> crate::error::Result<ModeBasis> {
        let orders: Vec<u32> = self.mux.ports.iter().map(|m| m.group_order()).collect();
        ModeBasis::new(self.fiber.clone(), &orders)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let text = c.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c = RunConfig::from_json(r#"{"crosstalk": {"xt_db": "-inf", "drift_sigma": 1, "seed": 4}}"#).unwrap();
        assert_eq!(c.crosstalk.xt_db, f64::NEG_INFINITY);
        assert_eq!(c.fiber, FiberSpec::default());
        assert_eq!(c.channels, vec![3, 4, 5, 6]);
    }

    #[test]
    fn errors_carry_lines() {
        let text = "{\n  \"fiber\": {\n    \"a\": 25e-6,\n    \"n1\": 1.47,\n    \"delta\": 0.2,\n    \"L\": 5000,\n    \"lambda\": 1.55e-6\n  }\n}";
        let e = RunConfig::from_json(text).unwrap_err();
        assert_eq!(e.path, "fiber.delta");
        assert_eq!(e.line, Some(5));
        assert!(e.message.contains("(0, 0.05)"), "{e}");

        let e = RunConfig::from_json("{\n  \"channels\": [3, 3]\n}").unwrap_err();
        assert_eq!(e.line, Some(2));

        let e = RunConfig::from_json("{\n  \"fiber\": {\n    \"a\": ,\n  }\n}").unwrap_err();
        assert_eq!(e.line, Some(3));

        let e = RunConfig::from_json("{\"bogus\": 1}").unwrap_err();
        assert!(e.message.contains("bogus"));
    }
}
