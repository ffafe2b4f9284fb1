//! Two-shuffler thresholding on blinded crowd IDs.
//!
//! Shuffler 1 raises each El Gamal ciphertext to a secret α and reshuffles.
//! Shuffler 2 decrypts to α·H(key), which groups equal keys without
//! revealing them.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::policy::ThresholdPolicy;
use super::threshold::{apply_threshold, count_crowds, ThresholdOutcome};
use super::{Batch, ShuffledRecord, ShufflerError};
use crate::batch::RecordBatch;
use crate::crypto::{blind, encode_point, unblind_decrypt, BlindingSecret, GroupElement, KeyPair};
use crate::encoder::{seal_report, CrowdId};

/// Blinds every crowd ID and reshuffles. Records without a blinded ID are
/// dropped; the count of dropped records is returned.
pub fn blind_stage1<R: Rng + ?Sized>(batch: Batch, b: &BlindingSecret, rng: &mut R) -> (Batch, usize) {
    let before = batch.records.len();
    let mut records: Vec<ShuffledRecord> = batch
        .records
        .into_iter()
        .filter_map(|r| match r.crowd_id {
            CrowdId::Blinded(ct) => Some(ShuffledRecord {
                crowd_id: CrowdId::Blinded(blind(&ct, b)),
                inner: r.inner,
            }),
            _ => None,
        })
        .collect();
    let dropped = before - records.len();
    records.shuffle(rng);
    (
        Batch {
            epoch_id: batch.epoch_id,
            records,
        },
        dropped,
    )
}

/// Re-encrypts stage-1 output to shuffler 2 as ordinary reports.
pub fn forward_to_shuffler2<R: RngCore + ?Sized>(
    batch: &Batch,
    shuffler2: &GroupElement,
    rng: &mut R,
) -> Result<Vec<Vec<u8>>, ShufflerError> {
    batch
        .records
        .iter()
        .map(|r| Ok(seal_report(&r.crowd_id, &r.inner, shuffler2, rng)?.to_bytes()))
        .collect()
}

/// Replaces blinded IDs with the pseudonym α·H(key), then counts and
/// thresholds. Records that are not blinded are dropped before counting.
pub fn blind_stage2_threshold<R: Rng + ?Sized>(
    batch: Batch,
    shuffler2: &KeyPair,
    policy: &ThresholdPolicy,
    max_distinct: usize,
    rng: &mut R,
) -> Result<ThresholdOutcome, ShufflerError> {
    policy.validate()?;
    let records = batch
        .records
        .into_iter()
        .filter_map(|r| match r.crowd_id {
            CrowdId::Blinded(ct) => Some(ShuffledRecord {
                crowd_id: CrowdId::Pseudonym(encode_point(&unblind_decrypt(shuffler2, &ct))),
                inner: r.inner,
            }),
            _ => None,
        })
        .collect();
    let pseudonymous = Batch {
        epoch_id: batch.epoch_id,
        records,
    };
    let counts = count_crowds(&pseudonymous, max_distinct)?;
    apply_threshold(&pseudonymous, &counts, policy, rng)
}

/// Shuffler 1 end to end: intake, blind, re-seal for shuffler 2.
/// Uses tape streams ("shuffler1", "intake"), ("shuffler1", "blind"),
/// ("shuffler1", "forward").
pub fn run_shuffler1(
    reports: &RecordBatch,
    shuffler1: &KeyPair,
    blinding: &BlindingSecret,
    shuffler2: &GroupElement,
    epoch_id: &str,
    tape: &crate::rng::RngTape,
) -> Result<(RecordBatch, super::IntakeStats), ShufflerError> {
    let (batch, mut stats) = super::intake(
        reports.iter(),
        shuffler1,
        epoch_id,
        &mut tape.stream("shuffler1", "intake"),
    );
    let (blinded, dropped) = blind_stage1(batch, blinding, &mut tape.stream("shuffler1", "blind"));
    stats.corrupt += dropped;
    let sealed = forward_to_shuffler2(&blinded, shuffler2, &mut tape.stream("shuffler1", "forward"))?;
    Ok((RecordBatch::from_records(reports.record_len(), &sealed)?, stats))
}

/// Shuffler 2 end to end. The threshold stream is ("shuffler", "threshold"),
/// shared with the single-shuffler pipeline.
pub fn run_shuffler2(
    reports: &RecordBatch,
    shuffler2: &KeyPair,
    cfg: &super::ShufflerConfig,
    epoch_id: &str,
    tape: &crate::rng::RngTape,
) -> Result<super::ShufflerRun, ShufflerError> {
    let inner_len = super::report_layout(reports)?.map_or(0, |(_, l)| l);
    let (batch, intake) = super::intake(
        reports.iter(),
        shuffler2,
        epoch_id,
        &mut tape.stream("shuffler2", "intake"),
    );
    let outcome = blind_stage2_threshold(
        batch,
        shuffler2,
        &cfg.policy,
        cfg.max_distinct,
        &mut tape.stream("shuffler", "threshold"),
    )?;
    let output = super::survivors_batch(&outcome.survivors, inner_len)?;
    Ok(super::ShufflerRun {
        stats: super::ShufflerStats {
            epoch_id: epoch_id.to_string(),
            input_count: reports.len(),
            surviving_count: output.len(),
        },
        output,
        intake,
        outcome,
        trace: None,
    })
}
