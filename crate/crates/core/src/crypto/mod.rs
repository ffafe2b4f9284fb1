//! Group, field and symmetric primitives shared by every pipeline stage.

mod detenc;
mod elgamal;
mod envelope;
mod field;
mod group;
mod shamir;

use thiserror::Error;

pub use detenc::{deterministic_decrypt, deterministic_encrypt, message_derived_key, MessageKey, SymmetricKey};
pub use elgamal::{blind, elgamal_encrypt, unblind_decrypt, BlindingSecret, ElGamalCiphertext};
pub use envelope::{open, seal, AeadEnvelope};
pub use field::{Gf251, PrimeField};
pub use group::{decode_point, encode_point, hash_to_group, GroupElement, GroupParams, KeyPair};
pub use shamir::{interpolate_at_zero, shamir_reconstruct, shamir_share, ShamirError, ShamirShare, SharingPolynomial};

/// Scalar field of the pipeline group.
pub use curve25519_dalek::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("authentication failed")]
    Authentication,
    #[error("integrity check failed")]
    Integrity,
    #[error("invalid group element encoding")]
    InvalidPoint,
    #[error("plaintext of {len} bytes exceeds {max}")]
    PlaintextTooLarge { len: usize, max: usize },
    #[error("blinding exponent must be nonzero")]
    ZeroBlinding,
    #[error("malformed input: {0}")]
    Malformed(&'static str),
}
