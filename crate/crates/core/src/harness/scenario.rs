//! Scenario configuration in the flat `key = value` format.

use std::path::PathBuf;

use serde::Serialize;

use super::corpus::Workload;
use super::HarnessError;
use crate::config::KvConfig;
use crate::encoder::CrowdIdMode;
use crate::shuffler::{ThresholdPolicy, POLICY_KEYS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Histogram,
    Covariance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub workload: Workload,
    /// Vocabulary, page or item domain size.
    pub vocab_size: u64,
    pub zipf_exponent: f64,
    /// Records for vocab and perms, users for flix.
    pub n_samples: usize,
    pub ratings_per_user: usize,
    pub crowd_mode: CrowdIdMode,
    pub shufflers: usize,
    /// 0 disables secret-share encoding.
    pub share_t: usize,
    pub flip_prob: f64,
    /// Fraction of flix item ids replaced by random ones before pairing.
    pub replace_frac: f64,
    pub max_payload: usize,
    pub oblivious: bool,
    pub analysis: Analysis,
    pub policy: ThresholdPolicy,
    pub release_epsilon: Option<f64>,
    pub release_sensitivity: f64,
    /// Runs the randomized-response baseline at this ε.
    pub baseline_epsilon: Option<f64>,
    pub partitions: usize,
    pub seed: u64,
    /// Relative to the workspace.
    pub output_dir: PathBuf,
    pub corpus_path: Option<PathBuf>,
}

const SCENARIO_KEYS: &[&str] = &[
    "name",
    "workload",
    "vocab_size",
    "zipf_exponent",
    "n_samples",
    "ratings_per_user",
    "crowd_mode",
    "shufflers",
    "share_t",
    "flip_prob",
    "replace_frac",
    "max_payload",
    "oblivious",
    "analysis",
    "release_epsilon",
    "release_sensitivity",
    "baseline_epsilon",
    "partitions",
    "output_dir",
    "corpus_path",
];

pub const PRESETS: &[&str] = &["crowd", "nocrowd", "secret_crowd", "blinded", "naive", "perms", "flix"];

impl ScenarioConfig {
    /// Plaintext crowd IDs, naive T = 20, vocab 10⁵, exponent 1.1, 10⁴ samples.
    pub fn base(name: &str) -> Self {
        ScenarioConfig {
            name: name.to_string(),
            workload: Workload::Vocab,
            vocab_size: 100_000,
            zipf_exponent: 1.1,
            n_samples: 10_000,
            ratings_per_user: 8,
            crowd_mode: CrowdIdMode::Plain,
            shufflers: 1,
            share_t: 0,
            flip_prob: 0.0,
            replace_frac: 0.0,
            max_payload: 64,
            oblivious: false,
            analysis: Analysis::Histogram,
            policy: ThresholdPolicy::naive(20),
            release_epsilon: None,
            release_sensitivity: 1.0,
            baseline_epsilon: None,
            partitions: 1,
            seed: 1,
            output_dir: PathBuf::from(name),
            corpus_path: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        let mut c = Self::base(name);
        match name {
            "naive" => {}
            "crowd" => {
                c.crowd_mode = CrowdIdMode::Hashed;
                c.policy = ThresholdPolicy::vocab();
            }
            "nocrowd" => {
                c.crowd_mode = CrowdIdMode::Fixed;
                c.share_t = 20;
                c.max_payload = 128;
            }
            "secret_crowd" => {
                c.crowd_mode = CrowdIdMode::Hashed;
                c.share_t = 20;
                c.max_payload = 128;
                c.policy = ThresholdPolicy::vocab();
            }
            "blinded" => {
                c.crowd_mode = CrowdIdMode::Blinded;
                c.shufflers = 2;
                c.policy = ThresholdPolicy::vocab();
            }
            "perms" => {
                c.workload = Workload::Perms;
                c.vocab_size = 10_000;
                c.n_samples = 100_000;
                c.crowd_mode = CrowdIdMode::Hashed;
                c.flip_prob = 1e-4;
                c.policy = ThresholdPolicy::perms();
            }
            "flix" => {
                c.workload = Workload::Flix;
                c.vocab_size = 200;
                c.zipf_exponent = 0.8;
                c.n_samples = 2_000;
                c.crowd_mode = CrowdIdMode::Hashed;
                c.analysis = Analysis::Covariance;
                c.replace_frac = 0.1;
                c.policy = ThresholdPolicy::naive(5);
            }
            _ => {
                return Err(HarnessError::Config(format!(
                    "unknown preset `{name}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if (self.crowd_mode == CrowdIdMode::Blinded) != (self.shufflers == 2) {
            return bad("blinded crowd ids need exactly two shufflers, and two shufflers need blinded ids");
        }
        if !(1..=2).contains(&self.shufflers) {
            return bad("shufflers must be 1 or 2");
        }
        if self.vocab_size == 0 || !(self.zipf_exponent > 0.0) {
            return bad("vocab_size must be at least 1 and zipf_exponent positive");
        }
        if !(0.0..=1.0).contains(&self.flip_prob) || !(0.0..=1.0).contains(&self.replace_frac) {
            return bad("flip_prob and replace_frac must lie in [0, 1]");
        }
        if !self.partitions.is_power_of_two() {
            return bad("partitions must be a power of two");
        }
        if self.oblivious && self.shufflers == 2 {
            return bad("oblivious intake is only wired for the single-shuffler pipeline");
        }
        if self.analysis == Analysis::Covariance && self.workload != Workload::Flix {
            return bad("covariance analysis needs the flix workload");
        }
        if self.workload == Workload::Flix && self.share_t > 0 {
            return bad("flix tuples are not secret-share encoded");
        }
        self.policy.validate()?;
        Ok(())
    }

    /// `2 + max_payload`
    pub fn pad_to(&self) -> usize {
        self.max_payload + crate::format::PAYLOAD_LEN_PREFIX
    }

    pub fn from_config(text: &str) -> Result<Self, HarnessError> {
        let kv = KvConfig::parse(text)?;
        let allowed: Vec<&str> = SCENARIO_KEYS.iter().chain(POLICY_KEYS).copied().collect();
        kv.check_keys(&allowed)?;
        let name: String = kv.get_str("name").unwrap_or("scenario").to_string();
        let mut c = Self::base(&name);
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = kv.get(stringify!($field))? {
                    c.$field = v;
                }
            };
        }
        if let Some(w) = kv.get_str("workload") {
            c.workload = w.parse()?;
        }
        set!(vocab_size);
        set!(zipf_exponent);
        set!(n_samples);
        set!(ratings_per_user);
        if let Some(m) = kv.get_str("crowd_mode") {
            c.crowd_mode = m
                .parse()
                .map_err(|_| HarnessError::Config(format!("unknown crowd_mode `{m}`")))?;
        }
        set!(shufflers);
        set!(share_t);
        set!(flip_prob);
        set!(replace_frac);
        set!(max_payload);
        set!(oblivious);
        if let Some(a) = kv.get_str("analysis") {
            c.analysis = match a {
                "histogram" => Analysis::Histogram,
                "covariance" => Analysis::Covariance,
                _ => return Err(HarnessError::Config(format!("unknown analysis `{a}`"))),
            };
        }
        c.release_epsilon = kv.get("release_epsilon")?;
        set!(release_sensitivity);
        c.baseline_epsilon = kv.get("baseline_epsilon")?;
        set!(partitions);
        if let Some(p) = kv.get_str("output_dir") {
            c.output_dir = PathBuf::from(p);
        }
        c.corpus_path = kv.get_str("corpus_path").map(PathBuf::from);
        if kv.get_str("threshold_t").is_some() {
            c.policy = ThresholdPolicy::from_kv(&kv)?;
            // `seed` seeds the whole tape, not just the policy
            c.policy.seed = None;
        } else if kv.keys().any(|k| POLICY_KEYS.contains(&k) && k != "seed") {
            return Err(HarnessError::Config("policy keys given without threshold_t".into()));
        }
        set!(seed);
        c.validate()?;
        Ok(c)
    }

    pub fn to_config(&self) -> String {
        let mut s = format!(
            "name = {}\nworkload = {}\nvocab_size = {}\nzipf_exponent = {}\nn_samples = {}\nratings_per_user = {}\n\
             crowd_mode = {}\nshufflers = {}\nshare_t = {}\nflip_prob = {}\nreplace_frac = {}\nmax_payload = {}\n\
             oblivious = {}\nanalysis = {}\nrelease_sensitivity = {}\npartitions = {}\nseed = {}\noutput_dir = {}\n",
            self.name,
            self.workload,
            self.vocab_size,
            self.zipf_exponent,
            self.n_samples,
            self.ratings_per_user,
            self.crowd_mode.as_str(),
            self.shufflers,
            self.share_t,
            self.flip_prob,
            self.replace_frac,
            self.max_payload,
            self.oblivious,
            match self.analysis {
                Analysis::Histogram => "histogram",
                Analysis::Covariance => "covariance",
            },
            self.release_sensitivity,
            self.partitions,
            self.seed,
            self.output_dir.display(),
        );
        if let Some(e) = self.release_epsilon {
            s.push_str(&format!("release_epsilon = {e}\n"));
        }
        if let Some(e) = self.baseline_epsilon {
            s.push_str(&format!("baseline_epsilon = {e}\n"));
        }
        if let Some(p) = &self.corpus_path {
            s.push_str(&format!("corpus_path = {}\n", p.display()));
        }
        // the policy block carries its own seed line only when it differs
        let mut policy = self.policy.clone();
        policy.seed = None;
        s.push_str(&policy.to_config());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for p in PRESETS {
            let c = ScenarioConfig::preset(p).unwrap();
            c.validate().unwrap();
            let back = ScenarioConfig::from_config(&c.to_config()).unwrap();
            assert_eq!(back, c, "{p}");
        }
        assert!(ScenarioConfig::preset("rappor").is_err());
    }

    #[test]
    fn blinded_needs_two_shufflers() {
        assert!(ScenarioConfig::from_config("crowd_mode = blinded").is_err());
        assert!(ScenarioConfig::from_config("shufflers = 2").is_err());
        let c = ScenarioConfig::from_config("crowd_mode = blinded\nshufflers = 2\nthreshold_t = 3").unwrap();
        assert_eq!(c.policy, ThresholdPolicy::naive(3));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_config("colour = red").is_err());
        assert!(ScenarioConfig::from_config("sigma = 2").is_err());
        assert_eq!(ScenarioConfig::from_config("seed = 9").unwrap().seed, 9);
    }
}
