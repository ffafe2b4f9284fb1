//! Crowd counting and (randomized) thresholding.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::policy::ThresholdPolicy;
use super::{Batch, ShufflerError};

pub type CrowdCounts = HashMap<Vec<u8>, u64>;

/// Distinct crowd IDs whose counters fit in `budget` bytes of private
/// memory (ID bytes plus an 8-byte counter each).
pub fn max_distinct_for_budget(budget: usize, crowd_id_len: usize) -> usize {
    budget / (crowd_id_len + 8)
}

/// First pass: exact per-crowd counts.
pub fn count_crowds(batch: &Batch, max_distinct: usize) -> Result<CrowdCounts, ShufflerError> {
    let mut counts = CrowdCounts::new();
    for r in &batch.records {
        let key = r.crowd_id.to_bytes();
        if !counts.contains_key(&key) && counts.len() == max_distinct {
            return Err(ShufflerError::DomainTooLarge { max: max_distinct });
        }
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrowdDecision {
    /// Records dropped before the threshold test.
    pub drop: u64,
    pub forward: bool,
}

/// Draws the drop count, then the threshold noise, for one crowd of `count`
/// records.
pub fn crowd_decision<R: Rng + ?Sized>(count: u64, policy: &ThresholdPolicy, rng: &mut R) -> CrowdDecision {
    let drop = if policy.mode.drops() {
        let d = Normal::new(policy.drop_mean, policy.sigma)
            .expect("validated sigma")
            .sample(rng)
            .round();
        (d.max(0.0) as u64).min(count)
    } else {
        0
    };
    let noise = if policy.mode.noisy_threshold() {
        Normal::new(0.0, policy.sigma).expect("validated sigma").sample(rng)
    } else {
        0.0
    };
    CrowdDecision {
        drop,
        forward: (count - drop) as f64 > policy.threshold_t as f64 + noise,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ThresholdOutcome {
    /// Inner envelopes of surviving records, in random order.
    #[serde(skip)]
    pub survivors: Vec<Vec<u8>>,
    pub crowds: usize,
    pub crowds_forwarded: usize,
    pub records_dropped_by_noise: u64,
}

/// Second pass: drops and filters crowd by crowd.
///
/// Crowds are visited in order of their smallest inner envelope and records
/// within a crowd are sorted, so the random draws do not depend on how crowd
/// IDs are represented.
pub fn apply_threshold<R: Rng + ?Sized>(
    batch: &Batch,
    counts: &CrowdCounts,
    policy: &ThresholdPolicy,
    rng: &mut R,
) -> Result<ThresholdOutcome, ShufflerError> {
    let mut groups: HashMap<Vec<u8>, Vec<&[u8]>> = HashMap::with_capacity(counts.len());
    for r in &batch.records {
        groups.entry(r.crowd_id.to_bytes()).or_default().push(&r.inner);
    }
    if groups.len() != counts.len() || groups.iter().any(|(k, g)| counts.get(k) != Some(&(g.len() as u64))) {
        return Err(ShufflerError::InconsistentCounts);
    }
    let mut ordered: Vec<Vec<&[u8]>> = groups.into_values().collect();
    for g in &mut ordered {
        g.sort_unstable();
    }
    ordered.sort_unstable_by(|a, b| a[0].cmp(b[0]));

    let mut out = ThresholdOutcome {
        crowds: ordered.len(),
        ..Default::default()
    };
    for mut g in ordered {
        let decision = crowd_decision(g.len() as u64, policy, rng);
        if decision.drop > 0 {
            let (_, rest) = g.partial_shuffle(rng, decision.drop as usize);
            g = rest.to_vec();
            out.records_dropped_by_noise += decision.drop;
        }
        if decision.forward {
            out.crowds_forwarded += 1;
            out.survivors.extend(g.into_iter().map(<[u8]>::to_vec));
        }
    }
    out.survivors.shuffle(rng);
    Ok(out)
}
