use thiserror::Error;

/// Errors produced by digest construction, ingestion and queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Compression parameters below 10 give too few clusters for the
    /// interpolation model to be meaningful.
    #[error("compression parameter delta={0} is below the minimum of 10")]
    DeltaBelowMinimum(f64),
    /// Scale functions are only defined for positive, finite delta.
    #[error("compression parameter delta={0} must be positive and finite")]
    InvalidDelta(f64),
    #[error("merge buffer capacity must be at least 1")]
    InvalidBufferCapacity,
    #[error("working delta factor {0} must be >= 1 and finite")]
    InvalidDeltaFactor(f64),
    #[error("clustering growth limit K must be at least 1")]
    InvalidGrowthLimit,
    #[error("quantile fraction {0} is outside [0, 1]")]
    QuantileOutOfRange(f64),
    #[error("trim range [{0}, {1}] is not a sub-range of [0, 1] with lo < hi")]
    InvalidTrimRange(f64, f64),
    #[error("empty digest")]
    EmptyDigest,
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("sample value {0} is not finite")]
    NonFiniteValue(f64),
    #[error("sample weight {0} must be positive and finite")]
    InvalidWeight(f64),
    #[error("probe value is NaN")]
    NanProbe,
    #[error("digest was not built in instrumented mode")]
    NotInstrumented,
    #[error("digests use different scale functions")]
    MixedScaleKinds,
    #[error("output delta {out} exceeds an input delta {input}")]
    MergeDeltaTooLarge { out: f64, input: f64 },
    #[error("no digests to merge")]
    NoDigests,
    #[error("digest invariant violated: {0}")]
    InvariantViolation(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
