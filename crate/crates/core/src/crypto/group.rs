//! The pipeline group: Ristretto255, prime order
//! l = 2^252 + 27742317777372353535851937790883648493.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::Scalar;
use rand::RngCore;
use sha2::Sha512;

use super::field::PrimeField;
use super::CryptoError;
use crate::format::POINT_LEN;

pub type GroupElement = RistrettoPoint;

const HASH_TO_GROUP_DST: &[u8] = b"esa/hash-to-group/v1";

/// Identifies the prime-order group used throughout the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupParams {
    pub group_id: &'static str,
    /// Big-endian encoding of the group order.
    pub order_be: [u8; 32],
}

impl GroupParams {
    pub fn pipeline() -> Self {
        // l - 1 is the largest canonical scalar, so l = (l - 1) + 1 in bytes.
        let mut order_le = (-Scalar::ONE).to_bytes();
        let mut carry = 1u16;
        for b in order_le.iter_mut() {
            let sum = *b as u16 + carry;
            *b = sum as u8;
            carry = sum >> 8;
        }
        order_le.reverse();
        GroupParams {
            group_id: "ristretto255",
            order_be: order_le,
        }
    }

    pub fn generator(&self) -> GroupElement {
        curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT
    }
}

/// Maps arbitrary bytes to a group element with unknown discrete log.
///
/// Uses the Ristretto hash-to-group (Elligator on two SHA-512 halves) behind a
/// fixed domain-separation tag, so the output never changes across versions.
pub fn hash_to_group(data: &[u8]) -> GroupElement {
    let mut input = Vec::with_capacity(HASH_TO_GROUP_DST.len() + data.len());
    input.extend_from_slice(HASH_TO_GROUP_DST);
    input.extend_from_slice(data);
    RistrettoPoint::hash_from_bytes::<Sha512>(&input)
}

pub fn encode_point(p: &GroupElement) -> [u8; POINT_LEN] {
    p.compress().to_bytes()
}

pub fn decode_point(bytes: &[u8]) -> Result<GroupElement, CryptoError> {
    let compressed = CompressedRistretto::from_slice(bytes).map_err(|_| CryptoError::InvalidPoint)?;
    compressed.decompress().ok_or(CryptoError::InvalidPoint)
}

/// A secret scalar and its public point `g^secret`.
#[derive(Clone)]
pub struct KeyPair {
    secret: Scalar,
    public: GroupElement,
}

impl KeyPair {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Self::from_secret(<Scalar as PrimeField>::random_nonzero(rng))
    }

    pub fn from_secret(secret: Scalar) -> Self {
        let public = &secret * RISTRETTO_BASEPOINT_TABLE;
        KeyPair { secret, public }
    }

    pub fn secret(&self) -> &Scalar {
        &self.secret
    }

    pub fn public(&self) -> &GroupElement {
        &self.public
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.secret.to_bytes()
    }

    pub fn from_secret_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| CryptoError::Malformed("secret key width"))?;
        let secret: Option<Scalar> = Scalar::from_canonical_bytes(arr).into();
        match secret {
            Some(s) if s != Scalar::ZERO => Ok(Self::from_secret(s)),
            _ => Err(CryptoError::Malformed("secret key not a nonzero canonical scalar")),
        }
    }
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &encode_point(&self.public))
            .finish_non_exhaustive()
    }
}
