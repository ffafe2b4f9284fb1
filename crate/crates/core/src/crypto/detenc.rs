//! Message-derived keys and deterministic authenticated encryption.
//!
//! The nonce is synthetic: an HMAC of the message under the key. Equal
//! messages therefore encrypt to equal ciphertexts, and decryption re-derives
//! the nonce to check it.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hmac::{Hmac, Mac};
use sha2::{Digest, Sha256, Sha512};

use super::field::PrimeField;
use super::CryptoError;
use crate::format::{NONCE_LEN, SYMMETRIC_KEY_LEN};

const MESSAGE_KEY_DST: &[u8] = b"esa/message-key/v1";
const SYMMETRIC_KEY_DST: &[u8] = b"esa/det-key/v1";
const SIV_DST: &[u8] = b"esa/siv/v1";

/// `k_m = H(m)` as a field element, so it can be secret-shared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MessageKey<F> {
    element: F,
}

impl<F: PrimeField> MessageKey<F> {
    pub fn from_element(element: F) -> Self {
        MessageKey { element }
    }

    pub fn element(&self) -> F {
        self.element
    }

    pub fn symmetric_key(&self) -> SymmetricKey {
        let mut h = Sha256::new();
        h.update(SYMMETRIC_KEY_DST);
        h.update(self.element.to_be_bytes());
        SymmetricKey(h.finalize().into())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SymmetricKey(pub [u8; SYMMETRIC_KEY_LEN]);

impl std::fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

pub fn message_derived_key<F: PrimeField>(m: &[u8]) -> MessageKey<F> {
    let mut h = Sha512::new();
    h.update(MESSAGE_KEY_DST);
    h.update(m);
    let wide: [u8; 64] = h.finalize().into();
    MessageKey::from_element(F::from_uniform_bytes(&wide))
}

fn synthetic_nonce(k: &SymmetricKey, m: &[u8]) -> [u8; NONCE_LEN] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&k.0).expect("hmac takes any key length");
    mac.update(SIV_DST);
    mac.update(m);
    let full = mac.finalize().into_bytes();
    full[..NONCE_LEN].try_into().unwrap()
}

/// `nonce ‖ ciphertext ‖ tag`, a pure function of `(k, m)`.
pub fn deterministic_encrypt(k: &SymmetricKey, m: &[u8]) -> Vec<u8> {
    let nonce = synthetic_nonce(k, m);
    let ct = ChaCha20Poly1305::new(Key::from_slice(&k.0))
        .encrypt(Nonce::from_slice(&nonce), m)
        .expect("chacha20poly1305 encryption is infallible for in-range lengths");
    let mut out = Vec::with_capacity(NONCE_LEN + ct.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&ct);
    out
}

pub fn deterministic_decrypt(k: &SymmetricKey, c: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if c.len() < crate::format::DET_OVERHEAD {
        return Err(CryptoError::Integrity);
    }
    let (nonce, ct) = c.split_at(NONCE_LEN);
    let m = ChaCha20Poly1305::new(Key::from_slice(&k.0))
        .decrypt(Nonce::from_slice(nonce), ct)
        .map_err(|_| CryptoError::Integrity)?;
    if synthetic_nonce(k, &m) != nonce {
        return Err(CryptoError::Integrity);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use curve25519_dalek::Scalar;

    fn key(m: &[u8]) -> SymmetricKey {
        message_derived_key::<Scalar>(m).symmetric_key()
    }

    #[test]
    fn equal_messages_equal_ciphertexts() {
        let c1 = deterministic_encrypt(&key(b"hello"), b"hello");
        let c2 = deterministic_encrypt(&key(b"hello"), b"hello");
        assert_eq!(c1, c2);
        assert_eq!(
            message_derived_key::<Scalar>(b"hello"),
            message_derived_key::<Scalar>(b"hello")
        );
    }

    #[test]
    fn round_trip() {
        let k = key(b"m");
        assert_eq!(
            deterministic_decrypt(&k, &deterministic_encrypt(&k, b"m")).unwrap(),
            b"m"
        );
    }

    #[test]
    fn wrong_key_is_integrity_error() {
        let c = deterministic_encrypt(&key(b"alpha"), b"alpha");
        assert_eq!(deterministic_decrypt(&key(b"beta"), &c), Err(CryptoError::Integrity));
        assert_eq!(
            deterministic_decrypt(&key(b"alpha"), &c[..5]),
            Err(CryptoError::Integrity)
        );
    }

    #[test]
    fn tampered_nonce_rejected() {
        let k = key(b"z");
        let mut c = deterministic_encrypt(&k, b"z");
        c[0] ^= 1;
        assert!(deterministic_decrypt(&k, &c).is_err());
    }
}
