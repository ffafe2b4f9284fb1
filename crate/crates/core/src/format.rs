//! Wire and file format constants.
//!
//! Every fixed width used on the wire lives here.
//!
//! ```text
//! group element      POINT_LEN bytes, canonical compressed Ristretto255
//! AeadEnvelope       ephemeral_public (32) ‖ nonce (12) ‖ ciphertext (|m|) ‖ tag (16)
//! ShamirShare        x (BYTE_LEN, big-endian) ‖ y (BYTE_LEN, big-endian)
//! ElGamal ciphertext c1 (32) ‖ c2 (32)
//! padded payload     len (u16 LE) ‖ payload ‖ zero fill, total pad_to bytes
//! inner envelope     seal(analyzer, padded payload)
//! outer plaintext    crowd_id (width by kind) ‖ inner envelope
//! Report             version (1) ‖ crowd_id_kind (1) ‖ seal(shuffler, outer plaintext)
//! batch file         BATCH_MAGIC (8) ‖ record_len (u32 LE) ‖ count (u64 LE) ‖ records
//! ```
//!
//! With a 64-byte payload (`pad_to` = 66) and an 8-byte hashed crowd ID a
//! report is [`REFERENCE_RECORD_LEN`] = 196 bytes.

pub const POINT_LEN: usize = 32;
pub const SCALAR_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
pub const SYMMETRIC_KEY_LEN: usize = 32;

/// Bytes added by sealing: ephemeral point, nonce and tag.
pub const ENVELOPE_OVERHEAD: usize = POINT_LEN + NONCE_LEN + TAG_LEN;

/// Largest plaintext accepted by `seal`.
pub const MAX_SEAL_PLAINTEXT: usize = 1 << 16;

pub const ELGAMAL_LEN: usize = 2 * POINT_LEN;

/// Deterministic ciphertext overhead: synthetic nonce plus tag.
pub const DET_OVERHEAD: usize = NONCE_LEN + TAG_LEN;

pub const REPORT_VERSION: u8 = 1;
pub const REPORT_HEADER_LEN: usize = 2;

pub const PLAIN_CROWD_ID_LEN: usize = 32;
pub const MAX_PLAIN_CROWD_KEY: usize = PLAIN_CROWD_ID_LEN - 1;
pub const HASHED_CROWD_ID_LEN: usize = 8;
pub const FIXED_CROWD_ID_LEN: usize = 8;
pub const BLINDED_CROWD_ID_LEN: usize = ELGAMAL_LEN;
pub const PSEUDONYM_CROWD_ID_LEN: usize = POINT_LEN;

/// Little-endian length prefix in padded payloads.
pub const PAYLOAD_LEN_PREFIX: usize = 2;
/// Default payload cap.
pub const DEFAULT_MAX_PAYLOAD: usize = 64;
pub const DEFAULT_PAD_TO: usize = DEFAULT_MAX_PAYLOAD + PAYLOAD_LEN_PREFIX;

pub const BATCH_MAGIC: [u8; 8] = *b"ESABATCH";
pub const BATCH_HEADER_LEN: usize = 8 + 4 + 8;

/// Sealed length of a padded payload.
pub const fn inner_envelope_len(pad_to: usize) -> usize {
    pad_to + ENVELOPE_OVERHEAD
}

/// Serialized report length for a crowd-ID width and padding target.
pub const fn report_len(crowd_id_len: usize, pad_to: usize) -> usize {
    REPORT_HEADER_LEN + ENVELOPE_OVERHEAD + crowd_id_len + inner_envelope_len(pad_to)
}

/// Report size for 64 payload bytes and an 8-byte hashed crowd ID.
pub const REFERENCE_RECORD_LEN: usize = report_len(HASHED_CROWD_ID_LEN, DEFAULT_PAD_TO);
