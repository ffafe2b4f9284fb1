//! Client-side encoding: fragmentation, randomization, crowd IDs,
//! secret-share encoding and nested-encryption reports.

pub mod crowd;
pub mod fragment;
pub mod randomized;
pub mod report;
pub mod secret_share;

use thiserror::Error;

use crate::crypto::CryptoError;

pub use crowd::{hashed_crowd_id, make_crowd_id, CrowdId, CrowdIdContext, CrowdIdKind, CrowdIdMode};
pub use fragment::{fragment_mtuples, fragment_pairs, pair_combinations, rating_tuples, RatingTuple};
pub use randomized::{flip_bits, k_ary_randomized_response, rr_keep_probability, RrEstimator};
pub use report::{
    encode_report, inner_len, open_inner, pad_payload, pipeline_report_len, seal_report, unpad_payload, OpenedReport,
    Report,
};
pub use secret_share::{message_polynomial, secret_share_encode, SecretShareEncoding};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncoderError {
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("duplicate item id")]
    DuplicateId,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("blinded crowd ids need the second shuffler's public key")]
    MissingKey,
    #[error("plain crowd key of {0} bytes exceeds the fixed width")]
    CrowdKeyTooLong(usize),
    #[error("payload of {len} bytes exceeds the {max}-byte limit")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("malformed: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}
