//! Inner-envelope decryption and threshold decoding of secret-shared
//! payloads.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::crypto::{
    deterministic_decrypt, message_derived_key, shamir_reconstruct, KeyPair, MessageKey, PrimeField, ShamirShare,
};
use crate::encoder::{open_inner, SecretShareEncoding};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DecodeStats {
    pub input: usize,
    pub decrypt_failures: usize,
    /// Payloads that are not a `(c, aux)` pair.
    pub share_malformed: usize,
    pub share_groups: usize,
    /// Groups with fewer than t distinct shares.
    pub groups_below_t: usize,
    /// Groups whose reconstructed key does not match the message.
    pub groups_adversarial: usize,
    pub messages: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecodedCorpus {
    pub records: Vec<Vec<u8>>,
    pub stats: DecodeStats,
}

pub fn decrypt_corpus<'a, I>(inner: I, analyzer: &KeyPair) -> DecodedCorpus
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut out = DecodedCorpus::default();
    for env in inner {
        out.stats.input += 1;
        match open_inner(analyzer, env) {
            Ok(p) => out.records.push(p),
            Err(_) => out.stats.decrypt_failures += 1,
        }
    }
    out.stats.messages = out.records.len();
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShareDecodeOutcome {
    /// One message per record of every decodable group.
    pub messages: Vec<Vec<u8>>,
    pub malformed: usize,
    pub groups: usize,
    pub below_threshold: usize,
    pub adversarial: usize,
}

impl ShareDecodeOutcome {
    /// Folds the counters into corpus stats.
    pub fn record(&self, stats: &mut DecodeStats) {
        stats.share_malformed += self.malformed;
        stats.share_groups += self.groups;
        stats.groups_below_t += self.below_threshold;
        stats.groups_adversarial += self.adversarial;
        stats.messages = self.messages.len();
    }
}

/// Groups payloads by `c` and decodes every group holding at least `t`
/// shares with distinct x.
///
/// The first `t` distinct x values in byte order are interpolated; the result
/// must equal `H(m)` for the decrypted `m`.
pub fn secret_share_decode<F: PrimeField>(payloads: &[Vec<u8>], t: usize) -> ShareDecodeOutcome {
    let mut out = ShareDecodeOutcome::default();
    let mut groups: BTreeMap<Vec<u8>, Vec<ShamirShare<F>>> = BTreeMap::new();
    for p in payloads {
        match SecretShareEncoding::<F>::from_bytes(p) {
            Ok(e) => groups.entry(e.c).or_default().push(e.aux),
            Err(_) => out.malformed += 1,
        }
    }
    out.groups = groups.len();
    for (c, shares) in groups {
        let mut seen = BTreeSet::new();
        let mut distinct: Vec<ShamirShare<F>> = shares
            .iter()
            .filter(|s| seen.insert(s.x.to_be_bytes()))
            .copied()
            .collect();
        if t == 0 || distinct.len() < t {
            out.below_threshold += 1;
            continue;
        }
        distinct.sort_by_key(|s| s.x.to_be_bytes());
        let decoded = shamir_reconstruct(&distinct[..t], t).ok().and_then(|k| {
            let m = deterministic_decrypt(&MessageKey::from_element(k).symmetric_key(), &c).ok()?;
            (message_derived_key::<F>(&m).element() == k).then_some(m)
        });
        match decoded {
            Some(m) => out.messages.extend(std::iter::repeat_n(m, shares.len())),
            None => out.adversarial += 1,
        }
    }
    out
}
