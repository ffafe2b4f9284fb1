//! Secret-share encoding: `(c, aux)` where `c` is a deterministic encryption
//! of `m` under `k_m = H(m)` and `aux` is a share of `k_m`.
//!
//! The sharing polynomial is a function of `k_m` alone, so independent
//! clients holding the same `m` produce points on the same polynomial. Only
//! the evaluation point is random.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::EncoderError;
use crate::crypto::{
    deterministic_encrypt, message_derived_key, MessageKey, PrimeField, ShamirShare, SharingPolynomial,
};
use crate::format::DET_OVERHEAD;

const COEFFICIENT_DST: &[u8] = b"esa/share-coefficients/v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretShareEncoding<F> {
    pub c: Vec<u8>,
    pub aux: ShamirShare<F>,
}

impl<F: PrimeField> SecretShareEncoding<F> {
    /// `aux ‖ c`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.aux.to_bytes();
        out.extend_from_slice(&self.c);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EncoderError> {
        let w = ShamirShare::<F>::ENCODED_LEN;
        if bytes.len() < w + DET_OVERHEAD {
            return Err(EncoderError::Malformed("secret-share encoding too short"));
        }
        let aux = ShamirShare::from_bytes(&bytes[..w]).map_err(|_| EncoderError::Malformed("share"))?;
        Ok(SecretShareEncoding {
            c: bytes[w..].to_vec(),
            aux,
        })
    }

    /// Encoded length for a message of `m_len` bytes.
    pub fn encoded_len(m_len: usize) -> usize {
        ShamirShare::<F>::ENCODED_LEN + DET_OVERHEAD + m_len
    }
}

/// The degree `t - 1` polynomial every client derives for `k_m`.
pub fn message_polynomial<F: PrimeField>(k: &MessageKey<F>, t: usize) -> SharingPolynomial<F> {
    let mut h = Sha256::new();
    h.update(COEFFICIENT_DST);
    h.update((t as u64).to_le_bytes());
    h.update(k.element().to_be_bytes());
    let mut stream = ChaCha20Rng::from_seed(h.finalize().into());
    let mut coefficients = Vec::with_capacity(t);
    coefficients.push(k.element());
    coefficients.extend((1..t).map(|_| F::random(&mut stream)));
    SharingPolynomial::from_coefficients(coefficients)
}

pub fn secret_share_encode<F: PrimeField, R: RngCore + ?Sized>(
    m: &[u8],
    t: usize,
    rng: &mut R,
) -> Result<SecretShareEncoding<F>, EncoderError> {
    if t == 0 {
        return Err(EncoderError::InvalidParameter("threshold t must be at least 1"));
    }
    let k = message_derived_key::<F>(m);
    let c = deterministic_encrypt(&k.symmetric_key(), m);
    let aux = message_polynomial(&k, t)
        .share_at(F::random_nonzero(rng))
        .expect("x is nonzero");
    Ok(SecretShareEncoding { c, aux })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{deterministic_decrypt, shamir_reconstruct, Gf251, Scalar};

    #[test]
    fn equal_messages_share_c_not_aux() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = secret_share_encode::<Scalar, _>(b"word", 20, &mut rng).unwrap();
        let b = secret_share_encode::<Scalar, _>(b"word", 20, &mut rng).unwrap();
        assert_eq!(a.c, b.c);
        assert_ne!(a.aux.x, b.aux.x);
        let back = SecretShareEncoding::<Scalar>::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.to_bytes().len(), SecretShareEncoding::<Scalar>::encoded_len(4));
    }

    #[test]
    fn threshold_one_decodes_from_one_report() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let e = secret_share_encode::<Scalar, _>(b"solo", 1, &mut rng).unwrap();
        let k = shamir_reconstruct(&[e.aux], 1).unwrap();
        let m = deterministic_decrypt(&MessageKey::from_element(k).symmetric_key(), &e.c).unwrap();
        assert_eq!(m, b"solo");
    }

    #[test]
    fn threshold_twenty_needs_twenty_clients() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let shares: Vec<_> = (0..20)
            .map(|_| secret_share_encode::<Scalar, _>(b"popular", 20, &mut rng).unwrap().aux)
            .collect();
        let want = message_derived_key::<Scalar>(b"popular").element();
        assert_eq!(shamir_reconstruct(&shares, 20).unwrap(), want);
        assert!(shamir_reconstruct(&shares[..19], 20).is_err());
        assert_ne!(crate::crypto::interpolate_at_zero(&shares[..19]).unwrap(), want);
    }

    #[test]
    fn small_field_t_encodings_decode() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for t in 1..=5 {
            for m in [&b"a"[..], b"bb", b"message"] {
                let mut shares: Vec<ShamirShare<Gf251>> = Vec::new();
                while shares.len() < t {
                    let s = secret_share_encode::<Gf251, _>(m, t, &mut rng).unwrap().aux;
                    if !shares.iter().any(|o| o.x == s.x) {
                        shares.push(s);
                    }
                }
                let k = shamir_reconstruct(&shares, t).unwrap();
                assert_eq!(k, message_derived_key::<Gf251>(m).element());
            }
        }
    }

    #[test]
    fn small_field_t_minus_one_shares_fit_every_secret() {
        // For fixed t-1 points, count degree t-1 polynomials through them for
        // each candidate constant term. Equal counts mean the points carry no
        // information about k_m.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for t in 2..=3 {
            let mut shares: Vec<ShamirShare<Gf251>> = Vec::new();
            while shares.len() < t - 1 {
                let s = secret_share_encode::<Gf251, _>(b"probe", t, &mut rng).unwrap().aux;
                if !shares.iter().any(|o| o.x == s.x) {
                    shares.push(s);
                }
            }
            let mut counts = [0u32; 251];
            let elems: Vec<Gf251> = Gf251::elements().collect();
            let mut coeffs = vec![Gf251::zero(); t];
            let total = 251usize.pow(t as u32);
            for idx in 0..total {
                let mut r = idx;
                for c in coeffs.iter_mut() {
                    *c = elems[r % 251];
                    r /= 251;
                }
                let p = SharingPolynomial::from_coefficients(coeffs.clone());
                if shares.iter().all(|s| p.evaluate(s.x) == s.y) {
                    counts[coeffs[0].value() as usize] += 1;
                }
            }
            assert!(counts.iter().all(|&c| c == counts[0]), "t={t}");
            assert_eq!(counts[0], 1);
        }
    }

    #[test]
    fn zero_threshold_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        assert!(secret_share_encode::<Gf251, _>(b"x", 0, &mut rng).is_err());
    }
}
