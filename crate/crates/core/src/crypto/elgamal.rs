//! El Gamal encryption of group elements and exponent blinding.
//!
//! Written additively: a ciphertext of `mu` under `h = x·G` is
//! `(r·G, r·h + mu)`. Blinding by `alpha` multiplies both halves, and
//! decryption `c2 - x·c1` then yields `alpha·mu`.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::Scalar;
use rand::RngCore;

use super::field::PrimeField;
use super::group::{decode_point, encode_point, GroupElement, KeyPair};
use super::CryptoError;
use crate::format::{ELGAMAL_LEN, POINT_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElGamalCiphertext {
    pub c1: GroupElement,
    pub c2: GroupElement,
}

impl ElGamalCiphertext {
    pub fn to_bytes(&self) -> [u8; ELGAMAL_LEN] {
        let mut out = [0u8; ELGAMAL_LEN];
        out[..POINT_LEN].copy_from_slice(&encode_point(&self.c1));
        out[POINT_LEN..].copy_from_slice(&encode_point(&self.c2));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != ELGAMAL_LEN {
            return Err(CryptoError::InvalidPoint);
        }
        Ok(ElGamalCiphertext {
            c1: decode_point(&bytes[..POINT_LEN])?,
            c2: decode_point(&bytes[POINT_LEN..])?,
        })
    }
}

/// A nonzero blinding exponent held by the first shuffler.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct BlindingSecret {
    alpha: Scalar,
}

impl BlindingSecret {
    pub fn new(alpha: Scalar) -> Result<Self, CryptoError> {
        if alpha == Scalar::ZERO {
            return Err(CryptoError::ZeroBlinding);
        }
        Ok(BlindingSecret { alpha })
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        BlindingSecret {
            alpha: <Scalar as PrimeField>::random_nonzero(rng),
        }
    }

    pub fn alpha(&self) -> &Scalar {
        &self.alpha
    }
}

impl std::fmt::Debug for BlindingSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BlindingSecret(..)")
    }
}

pub fn elgamal_encrypt<R: RngCore + ?Sized>(pk: &GroupElement, mu: &GroupElement, rng: &mut R) -> ElGamalCiphertext {
    let r = <Scalar as PrimeField>::random_nonzero(rng);
    ElGamalCiphertext {
        c1: &r * RISTRETTO_BASEPOINT_TABLE,
        c2: pk * r + mu,
    }
}

pub fn blind(ct: &ElGamalCiphertext, b: &BlindingSecret) -> ElGamalCiphertext {
    ElGamalCiphertext {
        c1: ct.c1 * b.alpha,
        c2: ct.c2 * b.alpha,
    }
}

pub fn unblind_decrypt(kp: &KeyPair, ct: &ElGamalCiphertext) -> GroupElement {
    ct.c2 - ct.c1 * kp.secret()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::group::hash_to_group;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn plain_decrypt_recovers_mu() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let kp = KeyPair::generate(&mut rng);
        let mu = hash_to_group(b"crowd");
        let ct = elgamal_encrypt(kp.public(), &mu, &mut rng);
        assert_eq!(unblind_decrypt(&kp, &ct), mu);
        assert_eq!(ElGamalCiphertext::from_bytes(&ct.to_bytes()).unwrap(), ct);
    }

    #[test]
    fn blinding_preserves_equality() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let kp = KeyPair::generate(&mut rng);
        let b = BlindingSecret::random(&mut rng);
        let mu = hash_to_group(b"w");
        let ct1 = elgamal_encrypt(kp.public(), &mu, &mut rng);
        let ct2 = elgamal_encrypt(kp.public(), &mu, &mut rng);
        assert_ne!(ct1, ct2);
        let d1 = unblind_decrypt(&kp, &blind(&ct1, &b));
        let d2 = unblind_decrypt(&kp, &blind(&ct2, &b));
        assert_eq!(d1, d2);
        assert_eq!(d1, mu * b.alpha());
        let other = unblind_decrypt(
            &kp,
            &blind(&elgamal_encrypt(kp.public(), &hash_to_group(b"v"), &mut rng), &b),
        );
        assert_ne!(d1, other);
    }

    #[test]
    fn zero_blinding_rejected() {
        assert_eq!(BlindingSecret::new(Scalar::ZERO), Err(CryptoError::ZeroBlinding));
    }

    #[test]
    fn malformed_ciphertext() {
        assert_eq!(
            ElGamalCiphertext::from_bytes(&[0xee; 64]),
            Err(CryptoError::InvalidPoint)
        );
        assert_eq!(ElGamalCiphertext::from_bytes(&[0; 10]), Err(CryptoError::InvalidPoint));
    }
}
