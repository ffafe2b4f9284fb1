//! Oblivious intake: the outer layer is removed inside the stash shuffle, so
//! the host never sees which report became which record.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::{Rng, RngCore};

use super::{Batch, IntakeStats, ShuffledRecord, ShufflerError};
use crate::batch::RecordBatch;
use crate::crypto::KeyPair;
use crate::encoder::{CrowdId, CrowdIdKind, Report};
use crate::format::{ENVELOPE_OVERHEAD, NONCE_LEN, REPORT_HEADER_LEN, TAG_LEN};
use crate::stash::{
    derive_params, stash_shuffle, ChunkCap, ItemCodec, ParamRequest, ShuffleOptions, ShuffleParams, Trace,
};

/// Items are `valid ‖ crowd_id ‖ inner`; outputs are re-sealed under a key
/// that never leaves private memory.
pub struct ReportCodec<'a> {
    shuffler: &'a KeyPair,
    kind: CrowdIdKind,
    inner_len: usize,
    sealer: ChaCha20Poly1305,
}

impl<'a> ReportCodec<'a> {
    pub fn new(shuffler: &'a KeyPair, kind: CrowdIdKind, inner_len: usize, seal_key: [u8; 32]) -> Self {
        ReportCodec {
            shuffler,
            kind,
            inner_len,
            sealer: ChaCha20Poly1305::new(Key::from_slice(&seal_key)),
        }
    }

    /// Inverse of `seal_output`; `None` for sentinels and forgeries.
    pub fn open_output(&self, record: &[u8]) -> Option<ShuffledRecord> {
        if record.len() < NONCE_LEN {
            return None;
        }
        let (nonce, ct) = record.split_at(NONCE_LEN);
        let item = self.sealer.decrypt(Nonce::from_slice(nonce), ct).ok()?;
        if item.len() != self.item_len() || item[0] != 1 {
            return None;
        }
        let w = self.kind.width();
        Some(ShuffledRecord {
            crowd_id: CrowdId::from_bytes(self.kind, &item[1..1 + w]).ok()?,
            inner: item[1 + w..].to_vec(),
        })
    }
}

impl ItemCodec for ReportCodec<'_> {
    fn input_len(&self) -> usize {
        REPORT_HEADER_LEN + ENVELOPE_OVERHEAD + self.kind.width() + self.inner_len
    }

    fn item_len(&self) -> usize {
        1 + self.kind.width() + self.inner_len
    }

    fn output_len(&self) -> usize {
        NONCE_LEN + self.item_len() + TAG_LEN
    }

    fn open_input(&self, record: &[u8]) -> Vec<u8> {
        let mut item = vec![0u8; self.item_len()];
        let opened = Report::from_bytes(record)
            .ok()
            .filter(|r| r.kind == self.kind)
            .and_then(|r| r.open(self.shuffler).ok())
            .filter(|o| o.inner.len() == self.inner_len);
        if let Some(o) = opened {
            item[0] = 1;
            item[1..1 + self.kind.width()].copy_from_slice(&o.crowd_id.to_bytes());
            item[1 + self.kind.width()..].copy_from_slice(&o.inner);
        }
        item
    }

    fn seal_output(&self, item: &[u8], rng: &mut dyn RngCore) -> Vec<u8> {
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        let mut out = nonce.to_vec();
        out.extend(
            self.sealer
                .encrypt(Nonce::from_slice(&nonce), item)
                .expect("chacha20poly1305 encryption is infallible for small inputs"),
        );
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HardenedConfig {
    /// Defaults to about √N / 2.
    pub num_buckets: Option<usize>,
    pub alpha: f64,
    /// S as a multiple of B.
    pub stash_per_bucket: usize,
    pub window: usize,
    pub private_mem_budget: usize,
    pub workers: usize,
    pub parallel: bool,
}

impl Default for HardenedConfig {
    fn default() -> Self {
        HardenedConfig {
            num_buckets: None,
            alpha: 4.0,
            stash_per_bucket: 4,
            window: 4,
            private_mem_budget: crate::stash::DEFAULT_PRIVATE_MEM_BUDGET,
            workers: 1,
            parallel: false,
        }
    }
}

impl HardenedConfig {
    pub fn params(&self, n: usize, item_len: usize) -> Result<ShuffleParams, ShufflerError> {
        let b = self
            .num_buckets
            .unwrap_or_else(|| ((n as f64).sqrt() / 2.0).round() as usize)
            .clamp(2, n.max(2));
        let req = ParamRequest::new(
            n,
            b,
            ChunkCap::Alpha(self.alpha),
            self.stash_per_bucket * b,
            self.window,
        )
        .item_len(item_len)
        .budget(self.private_mem_budget)
        .workers(self.workers.min(b));
        Ok(derive_params(&req)?)
    }
}

/// Outer decryption and shuffling in one oblivious pass.
pub fn hardened_intake<R: Rng + ?Sized>(
    reports: &RecordBatch,
    shuffler: &KeyPair,
    kind: CrowdIdKind,
    inner_len: usize,
    epoch_id: &str,
    cfg: &HardenedConfig,
    rng: &mut R,
) -> Result<(Batch, IntakeStats, Trace), ShufflerError> {
    let codec = ReportCodec::new(shuffler, kind, inner_len, rng.gen());
    let n = reports.len();
    let mut stats = IntakeStats {
        received: n,
        corrupt: 0,
    };
    let mut batch = Batch {
        epoch_id: epoch_id.to_string(),
        records: Vec::with_capacity(n),
    };
    if n < 2 {
        // nothing to hide in the order of at most one record
        for r in reports.iter() {
            let item = codec.open_input(r);
            match codec.open_output(&codec.seal_output(&item, &mut rand::rngs::OsRng)) {
                Some(rec) => batch.records.push(rec),
                None => stats.corrupt += 1,
            }
        }
        return Ok((batch, stats, Trace::new()));
    }
    if reports.record_len() != codec.input_len() {
        return Err(ShufflerError::RecordLength {
            expected: codec.input_len(),
            got: reports.record_len(),
        });
    }
    let params = cfg.params(n, codec.item_len())?;
    let opts = ShuffleOptions {
        parallel: cfg.parallel,
        scratch: None,
    };
    let out = stash_shuffle(reports, &params, &codec, &opts, rng)?;
    for rec in out.output.iter() {
        match codec.open_output(rec) {
            Some(r) => batch.records.push(r),
            None => stats.corrupt += 1,
        }
    }
    Ok((batch, stats, out.trace))
}
