//! Synthetic corpora: one client record per line.
//!
//! ```text
//! vocab   w<k>                         item k drawn ∝ k^-s
//! perms   p<page>,<feature>,<bits>     4-bit action bitmap, e.g. 0110
//! flix    <user>,<item>,<rating>       ratings 1..=5, users in order
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Zipf};

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Workload {
    Vocab,
    Perms,
    Flix,
}

impl Workload {
    pub fn as_str(self) -> &'static str {
        match self {
            Workload::Vocab => "vocab",
            Workload::Perms => "perms",
            Workload::Flix => "flix",
        }
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Workload {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vocab" => Ok(Workload::Vocab),
            "perms" => Ok(Workload::Perms),
            "flix" => Ok(Workload::Flix),
            _ => Err(HarnessError::Config(format!("unknown workload `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub lines: Vec<String>,
}

impl Corpus {
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.lines.iter().map(|l| l.len() + 1).sum());
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Self {
        Corpus {
            lines: text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_text()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(Self::from_text(&text))
    }

    /// Line counts by exact content.
    pub fn frequencies(&self) -> std::collections::BTreeMap<&str, u64> {
        let mut f = std::collections::BTreeMap::new();
        for l in &self.lines {
            *f.entry(l.as_str()).or_insert(0) += 1;
        }
        f
    }
}

fn zipf(vocab_size: u64, exponent: f64) -> Result<Zipf<f64>, HarnessError> {
    if vocab_size == 0 || !(exponent > 0.0) {
        return Err(HarnessError::Config(
            "zipf needs vocab_size >= 1 and exponent > 0".into(),
        ));
    }
    Zipf::new(vocab_size, exponent).map_err(|e| HarnessError::Config(e.to_string()))
}

/// Item ranks in `1..=vocab_size`.
pub fn zipf_ranks<R: Rng + ?Sized>(
    vocab_size: u64,
    exponent: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<u64>, HarnessError> {
    let z = zipf(vocab_size, exponent)?;
    Ok((0..n).map(|_| z.sample(rng) as u64).collect())
}

pub fn word(rank: u64) -> String {
    format!("w{rank}")
}

/// Rank of a `w<k>` word.
pub fn word_rank(w: &str) -> Option<u64> {
    w.strip_prefix('w')?.parse().ok()
}

pub fn generate_zipf_corpus<R: Rng + ?Sized>(
    vocab_size: u64,
    exponent: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Corpus, HarnessError> {
    Ok(Corpus {
        lines: zipf_ranks(vocab_size, exponent, n_samples, rng)?
            .into_iter()
            .map(word)
            .collect(),
    })
}

pub const PERMS_FEATURES: u32 = 8;

/// Pages are Zipf-distributed; each feature has its own bias toward each of
/// the four action bits.
pub fn generate_perms_corpus<R: Rng + ?Sized>(
    pages: u64,
    exponent: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Corpus, HarnessError> {
    let z = zipf(pages, exponent)?;
    let lines = (0..n_samples)
        .map(|_| {
            let page = z.sample(rng) as u64;
            let feature = rng.gen_range(0..PERMS_FEATURES);
            let bits: String = (0..4)
                .map(|b| {
                    if rng.gen_bool(if (feature + b) % 3 == 0 { 0.8 } else { 0.1 }) {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            format!("p{page},{feature},{bits}")
        })
        .collect();
    Ok(Corpus { lines })
}

/// `users` users each rate `per_user` distinct Zipf-chosen items.
pub fn generate_flix_corpus<R: Rng + ?Sized>(
    items: u64,
    exponent: f64,
    users: usize,
    per_user: usize,
    rng: &mut R,
) -> Result<Corpus, HarnessError> {
    let z = zipf(items, exponent)?;
    let per_user = per_user.min(items as usize);
    let mut lines = Vec::with_capacity(users * per_user);
    for u in 0..users {
        let mut rated = BTreeSet::new();
        while rated.len() < per_user {
            rated.insert(z.sample(rng) as u64);
        }
        for i in rated {
            lines.push(format!("{u},{i},{}", rng.gen_range(1..=5)));
        }
    }
    Ok(Corpus { lines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn single_word_vocab() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let c = generate_zipf_corpus(1, 1.1, 50, &mut rng).unwrap();
        assert!(c.lines.iter().all(|l| l == "w1"));
        assert_eq!(c.lines.len(), 50);
        assert!(generate_zipf_corpus(0, 1.1, 5, &mut rng).is_err());
        assert!(generate_zipf_corpus(5, 0.0, 5, &mut rng).is_err());
    }

    #[test]
    fn head_to_tail_ratio() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let ranks = zipf_ranks(10, 1.0, 1_000_000, &mut rng).unwrap();
        let c1 = ranks.iter().filter(|&&r| r == 1).count() as f64;
        let c10 = ranks.iter().filter(|&&r| r == 10).count() as f64;
        // c10 ≈ 34,000, so the ratio's relative error is about 0.6%
        assert!((c1 / c10 - 10.0).abs() < 0.3, "{}", c1 / c10);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_zipf_corpus(1000, 1.1, 500, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let b = generate_zipf_corpus(1000, 1.1, 500, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(Corpus::from_text(&a.to_text()), a);
    }

    #[test]
    fn other_workloads_parse() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let p = generate_perms_corpus(100, 1.1, 20, &mut rng).unwrap();
        assert!(p.lines.iter().all(|l| l.split(',').count() == 3));
        let f = generate_flix_corpus(20, 1.0, 3, 5, &mut rng).unwrap();
        assert_eq!(f.lines.len(), 15);
        assert_eq!(word_rank("w42"), Some(42));
    }
}
