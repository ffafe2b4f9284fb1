//! Fragmentation of a user's data into independently shuffled reports.

use super::EncoderError;

/// All unordered pairs of `items`, lower id first within each pair, in
/// lexicographic order of (first, second) positions after sorting by id.
pub fn pair_combinations<V: Clone>(items: &[(u64, V)]) -> Result<Vec<((u64, V), (u64, V))>, EncoderError> {
    if items.len() < 2 {
        return Err(EncoderError::TooFewItems(items.len()));
    }
    let mut sorted: Vec<&(u64, V)> = items.iter().collect();
    sorted.sort_by_key(|(id, _)| *id);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(EncoderError::DuplicateId);
    }
    let mut out = Vec::with_capacity(items.len() * (items.len() - 1) / 2);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            out.push(((*a).clone(), (*b).clone()));
        }
    }
    Ok(out)
}

/// Pairwise fragments serialized as `id (u64 LE) ‖ len (u16 LE) ‖ value` twice.
pub fn fragment_pairs(items: &[(u64, Vec<u8>)]) -> Result<Vec<Vec<u8>>, EncoderError> {
    Ok(pair_combinations(items)?
        .into_iter()
        .map(|((i, vi), (j, vj))| {
            let mut out = Vec::with_capacity(20 + vi.len() + vj.len());
            for (id, v) in [(i, vi), (j, vj)] {
                out.extend_from_slice(&id.to_le_bytes());
                out.extend_from_slice(&(v.len() as u16).to_le_bytes());
                out.extend_from_slice(&v);
            }
            out
        })
        .collect())
}

/// Consecutive disjoint windows of length `m`; a shorter tail is dropped.
pub fn fragment_mtuples<T: Clone>(sequence: &[T], m: usize) -> Result<Vec<Vec<T>>, EncoderError> {
    if m == 0 {
        return Err(EncoderError::InvalidParameter("m-tuple length must be at least 1"));
    }
    Ok(sequence.chunks_exact(m).map(<[T]>::to_vec).collect())
}

/// One `(i, r_ui, j, r_uj)` contribution to the item-item rating sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatingTuple {
    pub i: u32,
    pub r_i: f32,
    pub j: u32,
    pub r_j: f32,
}

impl RatingTuple {
    pub const ENCODED_LEN: usize = 16;

    pub fn to_bytes(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[0..4].copy_from_slice(&self.i.to_le_bytes());
        out[4..8].copy_from_slice(&self.r_i.to_le_bytes());
        out[8..12].copy_from_slice(&self.j.to_le_bytes());
        out[12..16].copy_from_slice(&self.r_j.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != Self::ENCODED_LEN {
            return None;
        }
        let word = |k: usize| -> [u8; 4] { bytes[k..k + 4].try_into().unwrap() };
        Some(RatingTuple {
            i: u32::from_le_bytes(word(0)),
            r_i: f32::from_le_bytes(word(4)),
            j: u32::from_le_bytes(word(8)),
            r_j: f32::from_le_bytes(word(12)),
        })
    }
}

/// All `i <= j` tuples for one user's ratings, diagonal included.
pub fn rating_tuples(ratings: &[(u32, f32)]) -> Result<Vec<RatingTuple>, EncoderError> {
    let mut sorted = ratings.to_vec();
    sorted.sort_by_key(|(i, _)| *i);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(EncoderError::DuplicateId);
    }
    let mut out = Vec::with_capacity(sorted.len() * (sorted.len() + 1) / 2);
    for (a, &(i, r_i)) in sorted.iter().enumerate() {
        for &(j, r_j) in &sorted[a..] {
            out.push(RatingTuple { i, r_i, j, r_j });
        }
    }
    Ok(out)
}
