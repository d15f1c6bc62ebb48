use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode index: nu = {nu}, mu = {mu} (need nu >= 0, mu >= 1)")]
    InvalidIndex { nu: i64, mu: i64 },

    #[error("invalid mode group order {0} (need m >= 3)")]
    InvalidOrder(i64),

    #[error("mode group {0} is not guided by this fiber")]
    NotGuided(u32),

    #[error("analytic branch needs a parabolic profile (alpha = 2), got alpha = {0}")]
    UnsupportedProfile(f64),

    #[error("field sampling grids differ")]
    DomainMismatch,

    #[error("target mode {0} is not in the mode basis")]
    TargetNotInBasis(String),

    #[error("invalid selectivity {0} dB")]
    InvalidSelectivity(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample rate mismatch: {0} vs {1}")]
    RateMismatch(f64, f64),

    #[error("waveforms do not match the mode basis: {0}")]
    BasisMismatch(String),

    #[error("LFSR seed must be a nonzero 15-bit state")]
    ZeroSeed,

    #[error("synchronization failed: peak correlation {peak:.4} below threshold {threshold:.4}")]
    SyncFailure { peak: f64, threshold: f64 },

    #[error("uniformity test not applicable: {errors} errors for {bins} bins")]
    NotApplicable { errors: usize, bins: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("probability {0} out of range")]
    OutOfRange(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
