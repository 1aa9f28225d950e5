use alloc::string::String;
use core::fmt;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An instance violates a structural invariant (dimension mismatch, empty
    /// arm set, tied best arm, ...).
    InvalidInstance(String),
    /// A configuration value is outside its admissible range.
    InvalidConfig(String),
    /// The log-likelihood or one of its derivatives became non-finite even
    /// after numerically stabilised evaluation.
    NonFiniteLikelihood,
    /// Fewer samples than the procedure's stated minimum.
    TooFewSamples { needed: u64, got: u64 },
    /// The requested objective is infinite at every vertex of the simplex, so
    /// no design can make it finite.
    NoSpanningSupport,
    /// A bucket that must be non-empty is empty.
    EmptyBucket,
    /// Rejection sampling for the packing ran out of retries; carries the
    /// number of vectors placed so far.
    PackingFailed { achieved: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::NonFiniteLikelihood => write!(f, "likelihood evaluation became non-finite"),
            Error::TooFewSamples { needed, got } => {
                write!(f, "too few samples: need at least {needed}, got {got}")
            }
            Error::NoSpanningSupport => {
                write!(f, "objective is unbounded on every vertex; support does not span")
            }
            Error::EmptyBucket => write!(f, "bucket is empty"),
            Error::PackingFailed { achieved } => {
                write!(f, "packing rejection budget exhausted after {achieved} vectors")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
