//! The analyzer: inner-envelope decryption, secret-share decoding,
//! histograms, DP release and covariance sums.

pub mod covariance;
pub mod decode;
pub mod histogram;

use thiserror::Error;

pub use covariance::{CovarianceAccumulators, CovarianceCell};
pub use decode::{decrypt_corpus, secret_share_decode, DecodeStats, DecodedCorpus, ShareDecodeOutcome};
pub use histogram::{display_key, dp_release, Histogram, MAX_RELEASE_EPSILON};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzerError {
    #[error("tuple ({i}, {j}) is not canonical: need i <= j")]
    NonCanonicalTuple { i: u32, j: u32 },
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("sensitivity must be positive, got {0}")]
    BadSensitivity(f64),
    #[error("payload is not a rating tuple")]
    BadTuple,
}
