//! Prime fields used for secret sharing.
//!
//! Production paths share over the scalar field of the pipeline group so a
//! single field implementation serves both Shamir sharing and blinding
//! exponents. [`Gf251`] exists so small-field properties can be checked
//! exhaustively.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use curve25519_dalek::Scalar;
use rand::RngCore;

/// A prime-order field with a fixed-width big-endian encoding.
pub trait PrimeField:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Width of [`PrimeField::to_be_bytes`].
    const BYTE_LEN: usize;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;

    /// Multiplicative inverse, `None` for zero.
    fn invert(&self) -> Option<Self>;

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self;

    /// Maps 64 uniform bytes to a (close to) uniform field element.
    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self;

    fn to_be_bytes(&self) -> Vec<u8>;

    /// Parses a canonical encoding; rejects wrong widths and out-of-range values.
    fn from_be_bytes(bytes: &[u8]) -> Option<Self>;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn random_nonzero<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Self::random(rng);
            if !v.is_zero() {
                return v;
            }
        }
    }
}

impl PrimeField for Scalar {
    const BYTE_LEN: usize = 32;

    fn zero() -> Self {
        Scalar::ZERO
    }

    fn one() -> Self {
        Scalar::ONE
    }

    fn from_u64(v: u64) -> Self {
        Scalar::from(v)
    }

    fn invert(&self) -> Option<Self> {
        if *self == Scalar::ZERO {
            None
        } else {
            Some(Scalar::invert(self))
        }
    }

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar::from_bytes_mod_order_wide(&wide)
    }

    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self {
        Scalar::from_bytes_mod_order_wide(bytes)
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        let mut out = self.to_bytes().to_vec();
        out.reverse();
        out
    }

    fn from_be_bytes(bytes: &[u8]) -> Option<Self> {
        let mut le: [u8; 32] = bytes.try_into().ok()?;
        le.reverse();
        Option::from(Scalar::from_canonical_bytes(le))
    }
}

/// The prime field with 251 elements.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Gf251(u8);

impl Gf251 {
    pub const MODULUS: u16 = 251;

    pub fn new(v: u16) -> Self {
        Gf251((v % Self::MODULUS) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// All field elements in increasing order.
    pub fn elements() -> impl Iterator<Item = Gf251> {
        (0..Self::MODULUS).map(Gf251::new)
    }
}

impl Add for Gf251 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Gf251::new(self.0 as u16 + rhs.0 as u16)
    }
}

impl Sub for Gf251 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Gf251::new(self.0 as u16 + Self::MODULUS - rhs.0 as u16)
    }
}

impl Mul for Gf251 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Gf251::new(((self.0 as u32 * rhs.0 as u32) % Self::MODULUS as u32) as u16)
    }
}

impl Neg for Gf251 {
    type Output = Self;
    fn neg(self) -> Self {
        Gf251::zero() - self
    }
}

impl PrimeField for Gf251 {
    const BYTE_LEN: usize = 1;

    fn zero() -> Self {
        Gf251(0)
    }

    fn one() -> Self {
        Gf251(1)
    }

    fn from_u64(v: u64) -> Self {
        Gf251((v % Self::MODULUS as u64) as u8)
    }

    fn invert(&self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        // Fermat: a^(p-2)
        let mut result = Gf251::one();
        let mut base = *self;
        let mut exp = Self::MODULUS - 2;
        while exp > 0 {
            if exp & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            exp >>= 1;
        }
        Some(result)
    }

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        // Rejection sampling keeps the distribution exactly uniform.
        loop {
            let b = (rng.next_u32() & 0xff) as u16;
            if b < Self::MODULUS {
                return Gf251(b as u8);
            }
        }
    }

    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self {
        let acc = bytes
            .iter()
            .fold(0u32, |acc, &b| (acc * 256 + b as u32) % Self::MODULUS as u32);
        Gf251(acc as u8)
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        vec![self.0]
    }

    fn from_be_bytes(bytes: &[u8]) -> Option<Self> {
        match bytes {
            [b] if (*b as u16) < Self::MODULUS => Some(Gf251(*b)),
            _ => None,
        }
    }
}
