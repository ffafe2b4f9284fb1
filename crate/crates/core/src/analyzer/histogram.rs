//! Exact histograms and per-bin Laplace release.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::AnalyzerError;

/// Larger ε values are clamped to this.
pub const MAX_RELEASE_EPSILON: f64 = 1e6;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Histogram {
    pub bins: BTreeMap<Vec<u8>, u64>,
    pub released: Option<BTreeMap<Vec<u8>, f64>>,
}

impl Histogram {
    pub fn from_records<I, T>(records: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        let mut bins = BTreeMap::new();
        for r in records {
            *bins.entry(r.as_ref().to_vec()).or_insert(0) += 1;
        }
        Histogram { bins, released: None }
    }

    pub fn unique(&self) -> usize {
        self.bins.len()
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    /// `key,count` lines sorted by key, with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,count\n");
        for (k, c) in &self.bins {
            let _ = writeln!(s, "{},{c}", display_key(k));
        }
        s
    }

    /// `key,count,released` for every released bin.
    pub fn released_csv(&self) -> Option<String> {
        let released = self.released.as_ref()?;
        let mut s = String::from("key,count,released\n");
        for (k, v) in released {
            let _ = writeln!(
                s,
                "{},{},{v:.6}",
                display_key(k),
                self.bins.get(k).copied().unwrap_or(0)
            );
        }
        Some(s)
    }
}

/// Printable ASCII keys are written as is; anything that could break a CSV
/// field is written as `0x` followed by hex.
pub fn display_key(k: &[u8]) -> String {
    let plain =
        !k.is_empty() && !k.starts_with(b"0x") && k.iter().all(|&b| b.is_ascii_graphic() && b != b',' && b != b'"');
    if plain {
        String::from_utf8(k.to_vec()).expect("ascii")
    } else {
        let mut s = String::with_capacity(2 + 2 * k.len());
        s.push_str("0x");
        for b in k {
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

/// Adds independent Laplace(sensitivity / ε) noise to every bin.
pub fn dp_release<R: Rng + ?Sized>(
    hist: &mut Histogram,
    epsilon: f64,
    sensitivity: f64,
    rng: &mut R,
) -> Result<(), AnalyzerError> {
    if !(epsilon > 0.0) {
        return Err(AnalyzerError::BadEpsilon(epsilon));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(AnalyzerError::BadSensitivity(sensitivity));
    }
    let scale = sensitivity / epsilon.min(MAX_RELEASE_EPSILON);
    // |X| ~ Exp(1/b) with a fair sign
    let magnitude = Exp::new(1.0 / scale).expect("positive rate");
    let released = hist
        .bins
        .iter()
        .map(|(k, &c)| {
            let noise = magnitude.sample(rng);
            let noise = if rng.gen::<bool>() { noise } else { -noise };
            (k.clone(), c as f64 + noise)
        })
        .collect();
    hist.released = Some(released);
    Ok(())
}
