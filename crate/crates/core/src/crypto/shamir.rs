//! Shamir t-of-n secret sharing over any [`PrimeField`].

use rand::RngCore;
use thiserror::Error;

use super::field::PrimeField;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShamirError {
    #[error("invalid sharing parameters t={t}, n={n}")]
    InvalidParameters { t: usize, n: usize },
    #[error("need {needed} shares, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("two shares have the same x coordinate")]
    DuplicateShareX,
    #[error("share has x = 0")]
    ZeroShareX,
    #[error("malformed share encoding")]
    Malformed,
}

/// A point `(x, P(x))` with `x != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShamirShare<F> {
    pub x: F,
    pub y: F,
}

impl<F: PrimeField> ShamirShare<F> {
    pub const ENCODED_LEN: usize = 2 * F::BYTE_LEN;

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.x.to_be_bytes();
        out.extend_from_slice(&self.y.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ShamirError> {
        if bytes.len() != Self::ENCODED_LEN {
            return Err(ShamirError::Malformed);
        }
        let (x, y) = bytes.split_at(F::BYTE_LEN);
        let x = F::from_be_bytes(x).ok_or(ShamirError::Malformed)?;
        let y = F::from_be_bytes(y).ok_or(ShamirError::Malformed)?;
        if x.is_zero() {
            return Err(ShamirError::ZeroShareX);
        }
        Ok(ShamirShare { x, y })
    }
}

/// A degree `t - 1` polynomial whose constant term is the shared secret.
#[derive(Clone, Debug)]
pub struct SharingPolynomial<F> {
    coefficients: Vec<F>,
}

impl<F: PrimeField> SharingPolynomial<F> {
    /// Random coefficients subject to `P(0) = secret`.
    pub fn random<R: RngCore + ?Sized>(secret: F, t: usize, rng: &mut R) -> Result<Self, ShamirError> {
        if t == 0 {
            return Err(ShamirError::InvalidParameters { t, n: 0 });
        }
        let mut coefficients = Vec::with_capacity(t);
        coefficients.push(secret);
        coefficients.extend((1..t).map(|_| F::random(rng)));
        Ok(SharingPolynomial { coefficients })
    }

    pub fn from_coefficients(coefficients: Vec<F>) -> Self {
        assert!(!coefficients.is_empty(), "polynomial needs a constant term");
        SharingPolynomial { coefficients }
    }

    pub fn threshold(&self) -> usize {
        self.coefficients.len()
    }

    pub fn secret(&self) -> F {
        self.coefficients[0]
    }

    pub fn evaluate(&self, x: F) -> F {
        self.coefficients.iter().rev().fold(F::zero(), |acc, &c| acc * x + c)
    }

    pub fn share_at(&self, x: F) -> Result<ShamirShare<F>, ShamirError> {
        if x.is_zero() {
            return Err(ShamirError::ZeroShareX);
        }
        Ok(ShamirShare { x, y: self.evaluate(x) })
    }
}

/// Splits `secret` into `n` shares at distinct random nonzero x, any `t` of
/// which reconstruct it.
///
/// `n` must be smaller than the field order; the caller is trusted on that
/// for large fields since no realistic `n` comes close.
pub fn shamir_share<F: PrimeField, R: RngCore + ?Sized>(
    secret: F,
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<ShamirShare<F>>, ShamirError> {
    if t == 0 || t > n || (F::BYTE_LEN == 1 && n >= 251) {
        return Err(ShamirError::InvalidParameters { t, n });
    }
    let poly = SharingPolynomial::random(secret, t, rng)?;
    let mut xs: Vec<F> = Vec::with_capacity(n);
    while xs.len() < n {
        let x = F::random_nonzero(rng);
        if !xs.contains(&x) {
            xs.push(x);
        }
    }
    xs.into_iter().map(|x| poly.share_at(x)).collect()
}

/// Lagrange interpolation of `P(0)` through the given points.
pub fn interpolate_at_zero<F: PrimeField>(shares: &[ShamirShare<F>]) -> Result<F, ShamirError> {
    let mut secret = F::zero();
    for (i, si) in shares.iter().enumerate() {
        if si.x.is_zero() {
            return Err(ShamirError::ZeroShareX);
        }
        let mut num = F::one();
        let mut den = F::one();
        for (j, sj) in shares.iter().enumerate() {
            if i == j {
                continue;
            }
            // basis_i(0) = prod x_j / (x_j - x_i)
            num = num * sj.x;
            den = den * (sj.x - si.x);
        }
        let inv = den.invert().ok_or(ShamirError::DuplicateShareX)?;
        secret = secret + si.y * num * inv;
    }
    Ok(secret)
}

/// Recovers the secret from the first `t` shares.
pub fn shamir_reconstruct<F: PrimeField>(shares: &[ShamirShare<F>], t: usize) -> Result<F, ShamirError> {
    if t == 0 {
        return Err(ShamirError::InvalidParameters { t, n: shares.len() });
    }
    if shares.len() < t {
        return Err(ShamirError::InsufficientShares {
            needed: t,
            got: shares.len(),
        });
    }
    for (i, a) in shares.iter().enumerate() {
        if shares[..i].iter().any(|b| b.x == a.x) {
            return Err(ShamirError::DuplicateShareX);
        }
    }
    interpolate_at_zero(&shares[..t])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::field::Gf251;
    use curve25519_dalek::Scalar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn g(v: u16) -> Gf251 {
        Gf251::new(v)
    }

    #[test]
    fn hand_lagrange_example() {
        // P(X) = 3 + 2X: shares (1,5), (2,7); 5*2 - 7 = 3.
        let shares = [ShamirShare { x: g(1), y: g(5) }, ShamirShare { x: g(2), y: g(7) }];
        assert_eq!(shamir_reconstruct(&shares, 2).unwrap(), g(3));
    }

    #[test]
    fn degree_zero_sharing() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let secret = <Scalar as PrimeField>::random(&mut rng);
        let shares = shamir_share(secret, 1, 5, &mut rng).unwrap();
        for s in &shares {
            assert_eq!(s.y, secret);
            assert_eq!(shamir_reconstruct(std::slice::from_ref(s), 1).unwrap(), secret);
        }
    }

    #[test]
    fn errors() {
        let s = ShamirShare { x: g(1), y: g(1) };
        assert_eq!(
            shamir_reconstruct(&[s], 2),
            Err(ShamirError::InsufficientShares { needed: 2, got: 1 })
        );
        assert_eq!(shamir_reconstruct(&[s, s], 2), Err(ShamirError::DuplicateShareX));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(shamir_share(g(1), 3, 2, &mut rng).is_err());
        assert!(shamir_share(g(1), 0, 2, &mut rng).is_err());
        assert!(shamir_share(g(1), 2, 251, &mut rng).is_err());
        assert_eq!(ShamirShare::<Gf251>::from_bytes(&[0, 3]), Err(ShamirError::ZeroShareX));
    }

    #[test]
    fn scalar_field_threshold_20_of_25() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let secret = <Scalar as PrimeField>::random(&mut rng);
        let mut shares = shamir_share(secret, 20, 25, &mut rng).unwrap();
        for rot in 0..5 {
            shares.rotate_left(rot);
            assert_eq!(shamir_reconstruct(&shares, 20).unwrap(), secret);
        }
        // 19 shares interpolate to something unrelated
        assert_ne!(interpolate_at_zero(&shares[..19]).unwrap(), secret);
        let bytes = shares[0].to_bytes();
        assert_eq!(bytes.len(), 64);
        assert_eq!(ShamirShare::<Scalar>::from_bytes(&bytes).unwrap(), shares[0]);
    }
}
