use core::fmt;

/// Errors reported by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A quantizer needs at least one threshold.
    EmptyQuantizer,
    /// Thresholds must be finite and strictly increasing.
    ThresholdsNotIncreasing,
    /// Two thresholds are closer than the solver can resolve.
    DegenerateQuantizer,
    /// Power must be non-negative and noise variance positive, both finite.
    InvalidChannel,
    /// The input distribution violates one of its invariants.
    InvalidDistribution(&'static str),
    /// Two containers that must line up do not.
    DimensionMismatch {
        /// Expected length.
        expected: usize,
        /// Length found.
        found: usize,
    },
    /// A solver option is out of range.
    InvalidOptions(&'static str),
    /// PAM benchmark requires an even constellation size of at least 2.
    InvalidPamOrder(usize),
    /// No point of the current support satisfies the power constraint.
    PowerInfeasible,
    /// The divergence curve did not saturate within the scanned range.
    SupportBoundUnsaturated,
    /// The requested rate is not reachable inside the search window.
    RateOutOfWindow,
    /// Generic argument error.
    InvalidArgument(&'static str),
}

/// Convenience alias.
pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyQuantizer => f.write_str("quantizer must have at least one threshold"),
            Error::ThresholdsNotIncreasing => {
                f.write_str("thresholds must be strictly increasing")
            }
            Error::DegenerateQuantizer => {
                f.write_str("degenerate quantizer: two thresholds within 1e-12")
            }
            Error::InvalidChannel => {
                f.write_str("power must be >= 0 and noise variance > 0 (both finite)")
            }
            Error::InvalidDistribution(why) => write!(f, "invalid input distribution: {why}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidOptions(why) => write!(f, "invalid solver options: {why}"),
            Error::InvalidPamOrder(k) => write!(f, "PAM order must be even and >= 2, got {k}"),
            Error::PowerInfeasible => {
                f.write_str("no support point satisfies the average power constraint")
            }
            Error::SupportBoundUnsaturated => {
                f.write_str("divergence did not saturate within the scanned range")
            }
            Error::RateOutOfWindow => f.write_str("rate not bracketed by the SNR search window"),
            Error::InvalidArgument(why) => f.write_str(why),
        }
    }
}

impl core::error::Error for Error {}
