//! Crowd IDs: the value the shuffler counts and thresholds on.

use std::fmt;
use std::str::FromStr;

use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::Sha256;

use super::EncoderError;
use crate::crypto::{elgamal_encrypt, hash_to_group, ElGamalCiphertext, GroupElement};
use crate::format::{
    BLINDED_CROWD_ID_LEN, FIXED_CROWD_ID_LEN, HASHED_CROWD_ID_LEN, MAX_PLAIN_CROWD_KEY, PLAIN_CROWD_ID_LEN,
    PSEUDONYM_CROWD_ID_LEN,
};

const FIXED_SENTINEL: [u8; FIXED_CROWD_ID_LEN] = [0xff; FIXED_CROWD_ID_LEN];

/// How a client derives its crowd ID.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CrowdIdMode {
    Plain,
    Hashed,
    Fixed,
    Blinded,
}

impl CrowdIdMode {
    pub fn kind(self) -> CrowdIdKind {
        match self {
            CrowdIdMode::Plain => CrowdIdKind::Plain,
            CrowdIdMode::Hashed => CrowdIdKind::Hashed,
            CrowdIdMode::Fixed => CrowdIdKind::Fixed,
            CrowdIdMode::Blinded => CrowdIdKind::Blinded,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CrowdIdMode::Plain => "plain",
            CrowdIdMode::Hashed => "hashed",
            CrowdIdMode::Fixed => "fixed",
            CrowdIdMode::Blinded => "blinded",
        }
    }
}

impl fmt::Display for CrowdIdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CrowdIdMode {
    type Err = EncoderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(CrowdIdMode::Plain),
            "hashed" => Ok(CrowdIdMode::Hashed),
            "fixed" => Ok(CrowdIdMode::Fixed),
            "blinded" => Ok(CrowdIdMode::Blinded),
            _ => Err(EncoderError::InvalidParameter("unknown crowd id mode")),
        }
    }
}

/// Wire tag for a crowd ID. `Pseudonym` only appears after the second
/// blinding stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CrowdIdKind {
    Plain = 0,
    Hashed = 1,
    Fixed = 2,
    Blinded = 3,
    Pseudonym = 4,
}

impl CrowdIdKind {
    pub fn width(self) -> usize {
        match self {
            CrowdIdKind::Plain => PLAIN_CROWD_ID_LEN,
            CrowdIdKind::Hashed => HASHED_CROWD_ID_LEN,
            CrowdIdKind::Fixed => FIXED_CROWD_ID_LEN,
            CrowdIdKind::Blinded => BLINDED_CROWD_ID_LEN,
            CrowdIdKind::Pseudonym => PSEUDONYM_CROWD_ID_LEN,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => CrowdIdKind::Plain,
            1 => CrowdIdKind::Hashed,
            2 => CrowdIdKind::Fixed,
            3 => CrowdIdKind::Blinded,
            4 => CrowdIdKind::Pseudonym,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrowdId {
    Plain(Vec<u8>),
    Hashed([u8; HASHED_CROWD_ID_LEN]),
    Fixed,
    Blinded(ElGamalCiphertext),
    Pseudonym([u8; PSEUDONYM_CROWD_ID_LEN]),
}

impl CrowdId {
    pub fn kind(&self) -> CrowdIdKind {
        match self {
            CrowdId::Plain(_) => CrowdIdKind::Plain,
            CrowdId::Hashed(_) => CrowdIdKind::Hashed,
            CrowdId::Fixed => CrowdIdKind::Fixed,
            CrowdId::Blinded(_) => CrowdIdKind::Blinded,
            CrowdId::Pseudonym(_) => CrowdIdKind::Pseudonym,
        }
    }

    /// Fixed-width encoding; plain keys are length-prefixed and zero-filled.
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            CrowdId::Plain(key) => {
                let mut out = vec![0u8; PLAIN_CROWD_ID_LEN];
                out[0] = key.len() as u8;
                out[1..1 + key.len()].copy_from_slice(key);
                out
            }
            CrowdId::Hashed(h) => h.to_vec(),
            CrowdId::Fixed => FIXED_SENTINEL.to_vec(),
            CrowdId::Blinded(ct) => ct.to_bytes().to_vec(),
            CrowdId::Pseudonym(p) => p.to_vec(),
        }
    }

    pub fn from_bytes(kind: CrowdIdKind, bytes: &[u8]) -> Result<Self, EncoderError> {
        if bytes.len() != kind.width() {
            return Err(EncoderError::Malformed("crowd id width"));
        }
        Ok(match kind {
            CrowdIdKind::Plain => {
                let n = bytes[0] as usize;
                if n > MAX_PLAIN_CROWD_KEY || bytes[1 + n..].iter().any(|&b| b != 0) {
                    return Err(EncoderError::Malformed("plain crowd id"));
                }
                CrowdId::Plain(bytes[1..1 + n].to_vec())
            }
            CrowdIdKind::Hashed => CrowdId::Hashed(bytes.try_into().unwrap()),
            CrowdIdKind::Fixed => {
                if bytes != FIXED_SENTINEL {
                    return Err(EncoderError::Malformed("fixed crowd id"));
                }
                CrowdId::Fixed
            }
            CrowdIdKind::Blinded => CrowdId::Blinded(ElGamalCiphertext::from_bytes(bytes)?),
            CrowdIdKind::Pseudonym => CrowdId::Pseudonym(bytes.try_into().unwrap()),
        })
    }
}

/// Keys a client needs to produce crowd IDs.
#[derive(Clone, Debug)]
pub struct CrowdIdContext {
    /// Per-pipeline key for the truncated keyed hash.
    pub hash_key: [u8; 32],
    /// Second shuffler's ElGamal public key, needed for blinded IDs.
    pub shuffler2_public: Option<GroupElement>,
}

impl CrowdIdContext {
    pub fn new(hash_key: [u8; 32]) -> Self {
        CrowdIdContext {
            hash_key,
            shuffler2_public: None,
        }
    }

    pub fn with_shuffler2(mut self, pk: GroupElement) -> Self {
        self.shuffler2_public = Some(pk);
        self
    }
}

/// First 8 bytes of HMAC-SHA256 under the pipeline key.
pub fn hashed_crowd_id(hash_key: &[u8; 32], crowd_key: &[u8]) -> [u8; HASHED_CROWD_ID_LEN] {
    let mut mac = Hmac::<Sha256>::new_from_slice(hash_key).expect("hmac accepts any key length");
    mac.update(crowd_key);
    let tag = mac.finalize().into_bytes();
    tag[..HASHED_CROWD_ID_LEN].try_into().unwrap()
}

pub fn make_crowd_id<R: RngCore + ?Sized>(
    crowd_key: &[u8],
    mode: CrowdIdMode,
    ctx: &CrowdIdContext,
    rng: &mut R,
) -> Result<CrowdId, EncoderError> {
    match mode {
        CrowdIdMode::Plain => {
            if crowd_key.len() > MAX_PLAIN_CROWD_KEY {
                return Err(EncoderError::CrowdKeyTooLong(crowd_key.len()));
            }
            Ok(CrowdId::Plain(crowd_key.to_vec()))
        }
        CrowdIdMode::Hashed => Ok(CrowdId::Hashed(hashed_crowd_id(&ctx.hash_key, crowd_key))),
        CrowdIdMode::Fixed => Ok(CrowdId::Fixed),
        CrowdIdMode::Blinded => {
            let pk = ctx.shuffler2_public.as_ref().ok_or(EncoderError::MissingKey)?;
            Ok(CrowdId::Blinded(elgamal_encrypt(pk, &hash_to_group(crowd_key), rng)))
        }
    }
}
