//! The shuffler: intake, crowd counting, thresholding and the two-shuffler
//! blinded variant.

pub mod blind;
pub mod hardened;
pub mod policy;
pub mod threshold;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::batch::{BatchError, RecordBatch};
use crate::config::ConfigError;
use crate::crypto::KeyPair;
use crate::encoder::{CrowdId, CrowdIdKind, EncoderError, Report};
use crate::format::{ENVELOPE_OVERHEAD, REPORT_HEADER_LEN};
use crate::stash::{StashError, Trace};

pub use blind::{blind_stage1, blind_stage2_threshold, forward_to_shuffler2};
pub use hardened::{hardened_intake, HardenedConfig, ReportCodec};
pub use policy::{ThresholdMode, ThresholdPolicy, POLICY_KEYS};
pub use threshold::{
    apply_threshold, count_crowds, crowd_decision, max_distinct_for_budget, CrowdCounts, CrowdDecision,
    ThresholdOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShufflerError {
    #[error("policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("more than {max} distinct crowd ids")]
    DomainTooLarge { max: usize },
    #[error("counts do not match the batch")]
    InconsistentCounts,
    #[error("records are {got} bytes, expected {expected}")]
    RecordLength { expected: usize, got: usize },
    #[error("mixed crowd id kinds in one batch")]
    MixedKinds,
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Stash(#[from] StashError),
    #[error("batch: {0}")]
    Batch(String),
}

impl From<BatchError> for ShufflerError {
    fn from(e: BatchError) -> Self {
        ShufflerError::Batch(e.to_string())
    }
}

/// One report after the outer layer is gone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShuffledRecord {
    pub crowd_id: CrowdId,
    pub inner: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub epoch_id: String,
    pub records: Vec<ShuffledRecord>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IntakeStats {
    pub received: usize,
    /// Reports that failed to parse or open; dropped.
    pub corrupt: usize,
}

/// Removes the outer layer and forgets arrival order.
pub fn intake<'a, I, R>(reports: I, shuffler: &KeyPair, epoch_id: &str, rng: &mut R) -> (Batch, IntakeStats)
where
    I: IntoIterator<Item = &'a [u8]>,
    R: Rng + ?Sized,
{
    let mut stats = IntakeStats::default();
    let mut records = Vec::new();
    for bytes in reports {
        stats.received += 1;
        match Report::from_bytes(bytes).and_then(|r| r.open(shuffler)) {
            Ok(o) => records.push(ShuffledRecord {
                crowd_id: o.crowd_id,
                inner: o.inner,
            }),
            Err(_) => stats.corrupt += 1,
        }
    }
    records.shuffle(rng);
    (
        Batch {
            epoch_id: epoch_id.to_string(),
            records,
        },
        stats,
    )
}

/// Crowd ID kind and inner envelope width of a batch file of reports.
/// Every record of a batch has the same length, so one header settles both.
pub fn report_layout(reports: &RecordBatch) -> Result<Option<(CrowdIdKind, usize)>, ShufflerError> {
    let Some(first) = reports.iter().next() else {
        return Ok(None);
    };
    let kind = first
        .get(1)
        .and_then(|&b| CrowdIdKind::from_byte(b))
        .ok_or(EncoderError::Malformed("unknown crowd id kind"))?;
    let fixed = REPORT_HEADER_LEN + ENVELOPE_OVERHEAD + kind.width();
    if reports.record_len() < fixed {
        return Err(ShufflerError::RecordLength {
            expected: fixed,
            got: reports.record_len(),
        });
    }
    if reports.iter().any(|r| r[1] != first[1]) {
        return Err(ShufflerError::MixedKinds);
    }
    Ok(Some((kind, reports.record_len() - fixed)))
}

/// The only numbers a shuffler publishes about an epoch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShufflerStats {
    pub epoch_id: String,
    pub input_count: usize,
    pub surviving_count: usize,
}

impl ShufflerStats {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

/// Inner envelopes as a batch file; `inner_len` is used when there are none.
pub fn survivors_batch(survivors: &[Vec<u8>], inner_len: usize) -> Result<RecordBatch, ShufflerError> {
    let len = survivors.first().map_or(inner_len, Vec::len);
    Ok(RecordBatch::from_records(len, survivors)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShufflerConfig {
    pub policy: ThresholdPolicy,
    pub max_distinct: usize,
    /// `Some` routes intake through the stash shuffle.
    pub hardened: Option<HardenedConfig>,
}

impl ShufflerConfig {
    pub fn new(policy: ThresholdPolicy) -> Self {
        ShufflerConfig {
            policy,
            max_distinct: max_distinct_for_budget(
                crate::stash::DEFAULT_PRIVATE_MEM_BUDGET,
                crate::format::PLAIN_CROWD_ID_LEN,
            ),
            hardened: None,
        }
    }
}

pub struct ShufflerRun {
    pub output: RecordBatch,
    pub intake: IntakeStats,
    pub outcome: ThresholdOutcome,
    pub stats: ShufflerStats,
    /// Untrusted accesses of an oblivious intake.
    pub trace: Option<Trace>,
}

/// Single-shuffler epoch: intake, count, threshold.
///
/// Draws from `tape` streams ("shuffler", "intake") and ("shuffler",
/// "threshold").
pub fn run_shuffler(
    reports: &RecordBatch,
    shuffler: &KeyPair,
    cfg: &ShufflerConfig,
    epoch_id: &str,
    tape: &crate::rng::RngTape,
) -> Result<ShufflerRun, ShufflerError> {
    cfg.policy.validate()?;
    let layout = report_layout(reports)?;
    let inner_len = layout.map_or(0, |(_, l)| l);
    let mut intake_rng = tape.stream("shuffler", "intake");
    let (batch, intake_stats, trace) = match (&cfg.hardened, layout) {
        (Some(h), Some((kind, inner_len))) => {
            let (b, s, t) = hardened_intake(reports, shuffler, kind, inner_len, epoch_id, h, &mut intake_rng)?;
            (b, s, Some(t))
        }
        _ => {
            let (b, s) = intake(reports.iter(), shuffler, epoch_id, &mut intake_rng);
            (b, s, None)
        }
    };
    let counts = count_crowds(&batch, cfg.max_distinct)?;
    let outcome = apply_threshold(&batch, &counts, &cfg.policy, &mut tape.stream("shuffler", "threshold"))?;
    let output = survivors_batch(&outcome.survivors, inner_len)?;
    Ok(ShufflerRun {
        stats: ShufflerStats {
            epoch_id: epoch_id.to_string(),
            input_count: reports.len(),
            surviving_count: output.len(),
        },
        output,
        intake: intake_stats,
        outcome,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode_report, inner_len};
    use crate::format::DEFAULT_PAD_TO;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn reports(n: u32, shuffler: &KeyPair, analyzer: &KeyPair, rng: &mut ChaCha20Rng) -> Vec<Vec<u8>> {
        (0..n)
            .map(|i| {
                let id = CrowdId::Plain(vec![(i % 3) as u8]);
                encode_report(
                    &i.to_le_bytes(),
                    &id,
                    analyzer.public(),
                    shuffler.public(),
                    DEFAULT_PAD_TO,
                    rng,
                )
                .unwrap()
                .to_bytes()
            })
            .collect()
    }

    #[test]
    fn intake_counts_corrupt_and_forgets_order() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = KeyPair::generate(&mut rng);
        let a = KeyPair::generate(&mut rng);
        let mut rs = reports(100, &s, &a, &mut rng);
        let (ok, st) = intake(rs.iter().map(Vec::as_slice), &s, "e", &mut rng);
        assert_eq!((ok.records.len(), st.corrupt), (100, 0));

        rs[5][70] ^= 0x80;
        let (b1, st) = intake(rs.iter().map(Vec::as_slice), &s, "e", &mut rng);
        assert_eq!((b1.records.len(), st.corrupt), (99, 1));

        rs.reverse();
        let (b2, _) = intake(rs.iter().map(Vec::as_slice), &s, "e", &mut rng);
        let key = |b: &Batch| {
            let mut v: Vec<_> = b.records.iter().map(|r| r.inner.clone()).collect();
            v.sort();
            v
        };
        assert_eq!(key(&b1), key(&b2));
    }

    #[test]
    fn output_holds_inner_envelopes_only() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let s = KeyPair::generate(&mut rng);
        let a = KeyPair::generate(&mut rng);
        let rs = reports(90, &s, &a, &mut rng);
        let batch = RecordBatch::from_records(rs[0].len(), &rs).unwrap();
        let tape = crate::rng::RngTape::new(3);
        let run = run_shuffler(&batch, &s, &ShufflerConfig::new(ThresholdPolicy::naive(20)), "e", &tape).unwrap();
        assert_eq!(run.output.len(), 90);
        assert_eq!(run.output.record_len(), inner_len(DEFAULT_PAD_TO));
        let crowd_bytes: Vec<Vec<u8>> = (0..3u8).map(|k| CrowdId::Plain(vec![k]).to_bytes()).collect();
        let bytes = run.output.as_bytes();
        for c in &crowd_bytes {
            assert!(!bytes.windows(c.len()).any(|w| w == c.as_slice()));
        }
        for r in run.output.iter() {
            crate::encoder::open_inner(&a, r).unwrap();
        }
    }

    #[test]
    fn stats_schema() {
        let st = ShufflerStats {
            epoch_id: "e7".into(),
            input_count: 10,
            surviving_count: 4,
        };
        let v: serde_json::Value = serde_json::from_str(&st.to_json_line()).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["epoch_id", "input_count", "surviving_count"]);
        assert_eq!(obj["surviving_count"], 4);
    }

    #[test]
    fn hardened_matches_evaluation_mode() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let s = KeyPair::generate(&mut rng);
        let a = KeyPair::generate(&mut rng);
        let rs = reports(150, &s, &a, &mut rng);
        let batch = RecordBatch::from_records(rs[0].len(), &rs).unwrap();
        let tape = crate::rng::RngTape::new(5);
        let mut cfg = ShufflerConfig::new(ThresholdPolicy::vocab());
        let plain = run_shuffler(&batch, &s, &cfg, "e", &tape).unwrap();
        cfg.hardened = Some(HardenedConfig::default());
        let hard = run_shuffler(&batch, &s, &cfg, "e", &tape).unwrap();
        let sorted = |b: &RecordBatch| {
            let mut v: Vec<Vec<u8>> = b.iter().map(<[u8]>::to_vec).collect();
            v.sort();
            v
        };
        assert_eq!(sorted(&plain.output), sorted(&hard.output));
    }
}
