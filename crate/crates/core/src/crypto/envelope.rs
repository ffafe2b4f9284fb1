//! Public-key authenticated encryption envelopes.
//!
//! Each seal draws a fresh ephemeral key pair, agrees a shared point with the
//! recipient, and runs HKDF-SHA256 over it to key ChaCha20-Poly1305. The
//! ephemeral point is bound as associated data.

use chacha20poly1305::aead::{AeadInPlace, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce, Tag};
use hkdf::Hkdf;
use rand::RngCore;
use sha2::Sha256;

use super::group::{decode_point, encode_point, GroupElement, KeyPair};
use super::CryptoError;
use crate::format::{ENVELOPE_OVERHEAD, MAX_SEAL_PLAINTEXT, NONCE_LEN, POINT_LEN, SYMMETRIC_KEY_LEN, TAG_LEN};

const SEAL_INFO: &[u8] = b"esa/seal/v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AeadEnvelope {
    pub ephemeral_public: [u8; POINT_LEN],
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
}

impl AeadEnvelope {
    pub fn serialized_len(&self) -> usize {
        ENVELOPE_OVERHEAD + self.ciphertext.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        self.write_to(&mut out);
        out
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.ephemeral_public);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.ciphertext);
        out.extend_from_slice(&self.tag);
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() < ENVELOPE_OVERHEAD {
            return Err(CryptoError::Malformed("envelope shorter than overhead"));
        }
        let (ephemeral_public, rest) = bytes.split_at(POINT_LEN);
        let (nonce, rest) = rest.split_at(NONCE_LEN);
        let (ciphertext, tag) = rest.split_at(rest.len() - TAG_LEN);
        Ok(AeadEnvelope {
            ephemeral_public: ephemeral_public.try_into().unwrap(),
            nonce: nonce.try_into().unwrap(),
            ciphertext: ciphertext.to_vec(),
            tag: tag.try_into().unwrap(),
        })
    }
}

fn derive_key(shared: &GroupElement, ephemeral: &[u8; POINT_LEN], recipient: &GroupElement) -> [u8; SYMMETRIC_KEY_LEN] {
    let mut salt = [0u8; 2 * POINT_LEN];
    salt[..POINT_LEN].copy_from_slice(ephemeral);
    salt[POINT_LEN..].copy_from_slice(&encode_point(recipient));
    let hk = Hkdf::<Sha256>::new(Some(&salt), &encode_point(shared));
    let mut key = [0u8; SYMMETRIC_KEY_LEN];
    hk.expand(SEAL_INFO, &mut key).expect("32 bytes is a valid HKDF length");
    key
}

pub fn seal<R: RngCore + ?Sized>(
    recipient_public: &GroupElement,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<AeadEnvelope, CryptoError> {
    if plaintext.len() > MAX_SEAL_PLAINTEXT {
        return Err(CryptoError::PlaintextTooLarge {
            len: plaintext.len(),
            max: MAX_SEAL_PLAINTEXT,
        });
    }
    let ephemeral = KeyPair::generate(rng);
    let ephemeral_public = encode_point(ephemeral.public());
    let shared = recipient_public * ephemeral.secret();
    let key = derive_key(&shared, &ephemeral_public, recipient_public);

    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let mut ciphertext = plaintext.to_vec();
    let tag = ChaCha20Poly1305::new(Key::from_slice(&key))
        .encrypt_in_place_detached(Nonce::from_slice(&nonce), &ephemeral_public, &mut ciphertext)
        .map_err(|_| CryptoError::Malformed("aead encrypt"))?;
    Ok(AeadEnvelope {
        ephemeral_public,
        nonce,
        ciphertext,
        tag: tag.into(),
    })
}

pub fn open(recipient: &KeyPair, env: &AeadEnvelope) -> Result<Vec<u8>, CryptoError> {
    let ephemeral = decode_point(&env.ephemeral_public).map_err(|_| CryptoError::Authentication)?;
    let shared = ephemeral * recipient.secret();
    let key = derive_key(&shared, &env.ephemeral_public, recipient.public());
    let mut plaintext = env.ciphertext.clone();
    ChaCha20Poly1305::new(Key::from_slice(&key))
        .decrypt_in_place_detached(
            Nonce::from_slice(&env.nonce),
            &env.ephemeral_public,
            &mut plaintext,
            Tag::from_slice(&env.tag),
        )
        .map_err(|_| CryptoError::Authentication)?;
    Ok(plaintext)
}
