//! Local-DP baselines: k-ary randomized response over the whole domain, or
//! within partitions keyed by a few hash bits of the item.

use std::collections::BTreeSet;

use rand::Rng;
use sha2::{Digest, Sha256};
use statrs::distribution::{Binomial, DiscreteCDF};

use super::HarnessError;
use crate::encoder::{k_ary_randomized_response, RrEstimator};
use crate::rng::RngTape;

/// Family-wise error rate of the per-domain detection test.
pub const DETECTION_ALPHA: f64 = 0.05;

/// Largest count a value with no true mass reaches with probability above
/// `DETECTION_ALPHA / k`; a value is detected when its count exceeds this.
///
/// Uses the exact binomial tail: at large `k` the null counts are near
/// Poisson(1) and a normal cut lets dozens of empty values through.
pub fn detection_count(n: u64, q: f64, k: usize) -> u64 {
    let null = Binomial::new(q, n).expect("q in [0, 1]");
    let tail = DETECTION_ALPHA / k as f64;
    let mut c = (n as f64 * q).floor() as u64;
    while c < n && null.sf(c) > tail {
        c += 1;
    }
    c
}

/// Partition of an item: the low bits of a hash of its rank.
pub fn partition_of(rank: u64, num_partitions: usize) -> usize {
    let h: [u8; 32] = Sha256::digest(rank.to_le_bytes()).into();
    (u64::from_le_bytes(h[..8].try_into().unwrap()) % num_partitions as u64) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineOutcome {
    /// Ranks whose estimate clears the detection threshold.
    pub recovered: BTreeSet<u64>,
    /// Reports per partition.
    pub partition_sizes: Vec<usize>,
}

/// Every client reports its rank (`1..=vocab_size`) through k-ary RR
/// inside its partition; each partition is decoded on its own.
pub fn partitioned_baseline(
    ranks: &[u64],
    vocab_size: u64,
    num_partitions: usize,
    epsilon: f64,
    tape: &RngTape,
) -> Result<BaselineOutcome, HarnessError> {
    if !num_partitions.is_power_of_two() {
        return Err(HarnessError::Config("partitions must be a power of two".into()));
    }
    let mut domains: Vec<Vec<u64>> = vec![Vec::new(); num_partitions];
    for r in 1..=vocab_size {
        domains[partition_of(r, num_partitions)].push(r);
    }
    let mut reports: Vec<Vec<usize>> = vec![Vec::new(); num_partitions];
    for (i, &r) in ranks.iter().enumerate() {
        let p = partition_of(r, num_partitions);
        let k = domains[p].len();
        let idx = domains[p]
            .binary_search(&r)
            .map_err(|_| HarnessError::Config(format!("rank {r} outside vocabulary")))?;
        let mut rng = tape.indexed_stream("baseline", "rr", i as u64);
        let v = if k < 2 {
            // a one-item domain has nothing to randomize over
            let _ = rng.gen::<u64>();
            idx
        } else {
            k_ary_randomized_response(idx, k, epsilon, &mut rng)?
        };
        reports[p].push(v);
    }
    let mut recovered = BTreeSet::new();
    for (p, rep) in reports.iter().enumerate() {
        let k = domains[p].len();
        if rep.is_empty() || k == 0 {
            continue;
        }
        let mut observed = vec![0u64; k];
        for &v in rep {
            observed[v] += 1;
        }
        let n = rep.len() as u64;
        if k < 2 {
            recovered.insert(domains[p][0]);
            continue;
        }
        let cut = detection_count(n, RrEstimator { k, epsilon }.null_probability(), k);
        recovered.extend(
            observed
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > cut)
                .map(|(v, _)| domains[p][v]),
        );
    }
    Ok(BaselineOutcome {
        recovered,
        partition_sizes: reports.iter().map(Vec::len).collect(),
    })
}

pub fn rr_baseline(
    ranks: &[u64],
    vocab_size: u64,
    epsilon: f64,
    tape: &RngTape,
) -> Result<BaselineOutcome, HarnessError> {
    partitioned_baseline(ranks, vocab_size, 1, epsilon, tape)
}
