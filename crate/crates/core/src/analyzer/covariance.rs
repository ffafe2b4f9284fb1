//! `S_ij` and `A_ij` sums over `(i, r_ui, j, r_uj)` contributions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::AnalyzerError;
use crate::encoder::RatingTuple;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CovarianceCell {
    /// S_ij
    pub s: u64,
    /// A_ij
    pub a: f64,
}

/// Keyed by `(i, j)` with `i <= j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CovarianceAccumulators {
    pub cells: BTreeMap<(u32, u32), CovarianceCell>,
}

impl CovarianceAccumulators {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, t: &RatingTuple) -> Result<(), AnalyzerError> {
        if t.i > t.j {
            return Err(AnalyzerError::NonCanonicalTuple { i: t.i, j: t.j });
        }
        let cell = self.cells.entry((t.i, t.j)).or_default();
        cell.s += 1;
        cell.a += f64::from(t.r_i) * f64::from(t.r_j);
        Ok(())
    }

    pub fn accumulate<'a, I>(tuples: I) -> Result<Self, AnalyzerError>
    where
        I: IntoIterator<Item = &'a RatingTuple>,
    {
        let mut acc = Self::new();
        for t in tuples {
            acc.add(t)?;
        }
        Ok(acc)
    }

    /// Parses every payload as a tuple; returns the number rejected.
    pub fn from_payloads<I, T>(payloads: I) -> (Self, usize)
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        let mut acc = Self::new();
        let mut bad = 0;
        for p in payloads {
            match RatingTuple::from_bytes(p.as_ref())
                .ok_or(AnalyzerError::BadTuple)
                .and_then(|t| acc.add(&t))
            {
                Ok(()) => {}
                Err(_) => bad += 1,
            }
        }
        (acc, bad)
    }

    pub fn merge(&mut self, other: &Self) {
        for (k, c) in &other.cells {
            let cell = self.cells.entry(*k).or_default();
            cell.s += c.s;
            cell.a += c.a;
        }
    }

    pub fn s(&self, i: u32, j: u32) -> u64 {
        self.cell(i, j).map_or(0, |c| c.s)
    }

    pub fn a(&self, i: u32, j: u32) -> f64 {
        self.cell(i, j).map_or(0.0, |c| c.a)
    }

    /// Either argument order.
    pub fn cell(&self, i: u32, j: u32) -> Option<&CovarianceCell> {
        self.cells.get(&(i.min(j), i.max(j)))
    }

    /// A_ij / S_ij
    pub fn estimate(&self) -> BTreeMap<(u32, u32), f64> {
        self.cells
            .iter()
            .filter(|(_, c)| c.s > 0)
            .map(|(k, c)| (*k, c.a / c.s as f64))
            .collect()
    }

    /// `i,j,s,a,estimate` sorted by `(i, j)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,s,a,estimate\n");
        for ((i, j), c) in &self.cells {
            let _ = writeln!(out, "{i},{j},{},{},{}", c.s, c.a, c.a / c.s as f64);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::rating_tuples;
    use proptest::prelude::*;

    fn t(i: u32, r_i: f32, j: u32, r_j: f32) -> RatingTuple {
        RatingTuple { i, r_i, j, r_j }
    }

    #[test]
    fn hand_example() {
        let acc = CovarianceAccumulators::accumulate(&[t(1, 5.0, 2, 3.0), t(1, 4.0, 2, 2.0)]).unwrap();
        assert_eq!(acc.s(1, 2), 2);
        assert_eq!(acc.a(1, 2), 23.0);
        assert_eq!(acc.estimate()[&(1, 2)], 11.5);
        assert_eq!(acc.to_csv(), "i,j,s,a,estimate\n1,2,2,23,11.5\n");
    }

    #[test]
    fn diagonal_and_empty() {
        let acc = CovarianceAccumulators::accumulate(&[t(3, 4.0, 3, 4.0)]).unwrap();
        assert_eq!((acc.s(3, 3), acc.a(3, 3)), (1, 16.0));
        assert!(CovarianceAccumulators::accumulate(&[]).unwrap().cells.is_empty());
        assert_eq!(
            CovarianceAccumulators::accumulate(&[t(2, 1.0, 1, 1.0)]),
            Err(AnalyzerError::NonCanonicalTuple { i: 2, j: 1 })
        );
    }

    #[test]
    fn payload_parsing_counts_rejects() {
        let good = t(1, 2.0, 4, 3.0).to_bytes().to_vec();
        let flipped = t(4, 2.0, 1, 3.0).to_bytes().to_vec();
        let (acc, bad) = CovarianceAccumulators::from_payloads([good, flipped, vec![0u8; 3]]);
        assert_eq!(bad, 2);
        assert_eq!(acc.s(4, 1), 1);
    }

    fn ratings() -> impl Strategy<Value = Vec<Vec<(u32, f32)>>> {
        proptest::collection::vec(
            proptest::collection::btree_map(0u32..8, 1u8..=5, 0..8)
                .prop_map(|m| m.into_iter().map(|(i, r)| (i, f32::from(r))).collect()),
            0..10,
        )
    }

    proptest! {
        #[test]
        fn order_independent_and_mergeable(users in ratings(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let tuples: Vec<RatingTuple> = users.iter().flat_map(|u| rating_tuples(u).unwrap()).collect();
            let whole = CovarianceAccumulators::accumulate(&tuples).unwrap();
            let mut shuffled = tuples.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha20Rng::seed_from_u64(seed));
            prop_assert_eq!(&CovarianceAccumulators::accumulate(&shuffled).unwrap(), &whole);
            let (l, r) = tuples.split_at(tuples.len() / 2);
            let mut merged = CovarianceAccumulators::accumulate(l).unwrap();
            merged.merge(&CovarianceAccumulators::accumulate(r).unwrap());
            prop_assert_eq!(merged, whole);
        }
    }
}
