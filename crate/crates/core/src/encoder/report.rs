//! Nested-encryption reports.
//!
//! The inner envelope is sealed to the analyzer around a padded payload; the
//! outer envelope is sealed to the shuffler around `crowd_id ‖ inner`.

use rand::RngCore;

use super::crowd::{CrowdId, CrowdIdKind};
use super::EncoderError;
use crate::crypto::{open, seal, AeadEnvelope, GroupElement, KeyPair};
use crate::format::{inner_envelope_len, report_len, PAYLOAD_LEN_PREFIX, REPORT_HEADER_LEN, REPORT_VERSION};

/// `len (u16 LE) ‖ payload ‖ zeros`, exactly `pad_to` bytes.
pub fn pad_payload(payload: &[u8], pad_to: usize) -> Result<Vec<u8>, EncoderError> {
    let max = pad_to.saturating_sub(PAYLOAD_LEN_PREFIX).min(u16::MAX as usize);
    if payload.len() > max {
        return Err(EncoderError::PayloadTooLarge {
            len: payload.len(),
            max,
        });
    }
    let mut out = vec![0u8; pad_to];
    out[..2].copy_from_slice(&(payload.len() as u16).to_le_bytes());
    out[2..2 + payload.len()].copy_from_slice(payload);
    Ok(out)
}

pub fn unpad_payload(padded: &[u8]) -> Result<Vec<u8>, EncoderError> {
    if padded.len() < PAYLOAD_LEN_PREFIX {
        return Err(EncoderError::Malformed("padded payload too short"));
    }
    let n = u16::from_le_bytes([padded[0], padded[1]]) as usize;
    let body = &padded[PAYLOAD_LEN_PREFIX..];
    if n > body.len() || body[n..].iter().any(|&b| b != 0) {
        return Err(EncoderError::Malformed("bad payload padding"));
    }
    Ok(body[..n].to_vec())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub kind: CrowdIdKind,
    pub outer: AeadEnvelope,
}

/// What the shuffler sees after removing the outer layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenedReport {
    pub crowd_id: CrowdId,
    /// Serialized inner envelope, opaque to the shuffler.
    pub inner: Vec<u8>,
}

impl Report {
    pub fn serialized_len(&self) -> usize {
        REPORT_HEADER_LEN + self.outer.serialized_len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.push(REPORT_VERSION);
        out.push(self.kind as u8);
        self.outer.write_to(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EncoderError> {
        if bytes.len() < REPORT_HEADER_LEN {
            return Err(EncoderError::Malformed("report shorter than header"));
        }
        if bytes[0] != REPORT_VERSION {
            return Err(EncoderError::Malformed("unknown report version"));
        }
        let kind = CrowdIdKind::from_byte(bytes[1]).ok_or(EncoderError::Malformed("unknown crowd id kind"))?;
        Ok(Report {
            kind,
            outer: AeadEnvelope::from_bytes(&bytes[REPORT_HEADER_LEN..])?,
        })
    }

    /// Removes the outer layer with the shuffler's key.
    pub fn open(&self, shuffler: &KeyPair) -> Result<OpenedReport, EncoderError> {
        let plain = open(shuffler, &self.outer)?;
        let w = self.kind.width();
        if plain.len() < w {
            return Err(EncoderError::Malformed("outer plaintext shorter than crowd id"));
        }
        let (id, inner) = plain.split_at(w);
        Ok(OpenedReport {
            crowd_id: CrowdId::from_bytes(self.kind, id)?,
            inner: inner.to_vec(),
        })
    }
}

/// Wraps an already sealed inner envelope for the next hop.
pub fn seal_report<R: RngCore + ?Sized>(
    crowd_id: &CrowdId,
    inner: &[u8],
    recipient: &GroupElement,
    rng: &mut R,
) -> Result<Report, EncoderError> {
    let mut plain = crowd_id.to_bytes();
    plain.extend_from_slice(inner);
    Ok(Report {
        kind: crowd_id.kind(),
        outer: seal(recipient, &plain, rng)?,
    })
}

pub fn encode_report<R: RngCore + ?Sized>(
    payload: &[u8],
    crowd_id: &CrowdId,
    analyzer_public: &GroupElement,
    shuffler_public: &GroupElement,
    pad_to: usize,
    rng: &mut R,
) -> Result<Report, EncoderError> {
    let inner = seal(analyzer_public, &pad_payload(payload, pad_to)?, rng)?;
    seal_report(crowd_id, &inner.to_bytes(), shuffler_public, rng)
}

/// Serialized report length for every report of one pipeline.
pub fn pipeline_report_len(kind: CrowdIdKind, pad_to: usize) -> usize {
    report_len(kind.width(), pad_to)
}

/// Analyzer side: opens a serialized inner envelope and strips padding.
pub fn open_inner(analyzer: &KeyPair, inner: &[u8]) -> Result<Vec<u8>, EncoderError> {
    let env = AeadEnvelope::from_bytes(inner)?;
    unpad_payload(&open(analyzer, &env)?)
}

/// Width of the inner envelope records the shuffler forwards to the analyzer.
pub fn inner_len(pad_to: usize) -> usize {
    inner_envelope_len(pad_to)
}
