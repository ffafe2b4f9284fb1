//! Thresholding policy and its config text.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ShufflerError;
use crate::config::KvConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    Naive,
    RandomizedThreshold,
    NoisyDrop,
    Both,
}

impl ThresholdMode {
    pub fn drops(self) -> bool {
        matches!(self, ThresholdMode::NoisyDrop | ThresholdMode::Both)
    }

    pub fn noisy_threshold(self) -> bool {
        matches!(self, ThresholdMode::RandomizedThreshold | ThresholdMode::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdMode::Naive => "naive",
            ThresholdMode::RandomizedThreshold => "randomized_threshold",
            ThresholdMode::NoisyDrop => "noisy_drop",
            ThresholdMode::Both => "both",
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdMode {
    type Err = ShufflerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "naive" => ThresholdMode::Naive,
            "randomized_threshold" | "randomized" => ThresholdMode::RandomizedThreshold,
            "noisy_drop" => ThresholdMode::NoisyDrop,
            "both" => ThresholdMode::Both,
            _ => return Err(ShufflerError::Policy(format!("unknown mode `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdPolicy {
    /// T
    pub threshold_t: u64,
    /// Mean of the per-crowd drop count.
    pub drop_mean: f64,
    /// σ of both the drop count and the threshold noise.
    pub sigma: f64,
    pub mode: ThresholdMode,
    /// (ε, δ) the configuration is claimed to give; logged, never checked.
    pub dp_claim: Option<(f64, f64)>,
    pub seed: Option<u64>,
}

pub const POLICY_KEYS: &[&str] = &[
    "threshold_t",
    "drop_mean",
    "sigma",
    "mode",
    "seed",
    "dp_epsilon",
    "dp_delta",
];

impl ThresholdPolicy {
    pub fn naive(threshold_t: u64) -> Self {
        ThresholdPolicy {
            threshold_t,
            drop_mean: 0.0,
            sigma: 0.0,
            mode: ThresholdMode::Naive,
            dp_claim: None,
            seed: None,
        }
    }

    /// T = 20, drops ~ N(10, 2²), threshold noise N(0, 2²).
    pub fn vocab() -> Self {
        ThresholdPolicy {
            threshold_t: 20,
            drop_mean: 10.0,
            sigma: 2.0,
            mode: ThresholdMode::Both,
            dp_claim: Some((2.25, 1e-6)),
            seed: None,
        }
    }

    /// T = 100 with threshold noise N(0, 4²).
    pub fn perms() -> Self {
        ThresholdPolicy {
            threshold_t: 100,
            drop_mean: 0.0,
            sigma: 4.0,
            mode: ThresholdMode::RandomizedThreshold,
            dp_claim: Some((1.2, 1e-7)),
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), ShufflerError> {
        if self.threshold_t < 1 {
            return Err(ShufflerError::Policy("threshold_t must be at least 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ShufflerError::Policy("sigma must be a non-negative number".into()));
        }
        if !(self.drop_mean >= 0.0 && self.drop_mean.is_finite()) {
            return Err(ShufflerError::Policy("drop_mean must be a non-negative number".into()));
        }
        Ok(())
    }

    pub fn from_config(text: &str) -> Result<Self, ShufflerError> {
        let kv = KvConfig::parse(text)?;
        kv.check_keys(POLICY_KEYS)?;
        Self::from_kv(&kv)
    }

    /// Reads the policy keys out of a larger config.
    pub fn from_kv(kv: &KvConfig) -> Result<Self, ShufflerError> {
        let mode = match kv.get_str("mode") {
            Some(m) => m.parse()?,
            None => ThresholdMode::Naive,
        };
        let dp_claim = match (kv.get::<f64>("dp_epsilon")?, kv.get::<f64>("dp_delta")?) {
            (Some(e), Some(d)) => Some((e, d)),
            (None, None) => None,
            _ => return Err(ShufflerError::Policy("dp_epsilon and dp_delta go together".into())),
        };
        let p = ThresholdPolicy {
            threshold_t: kv.require("threshold_t")?,
            drop_mean: kv.get("drop_mean")?.unwrap_or(0.0),
            sigma: kv.get("sigma")?.unwrap_or(0.0),
            mode,
            dp_claim,
            seed: kv.get("seed")?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_config(&self) -> String {
        let mut s = format!(
            "threshold_t = {}\ndrop_mean = {}\nsigma = {}\nmode = {}\n",
            self.threshold_t, self.drop_mean, self.sigma, self.mode
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!("seed = {seed}\n"));
        }
        if let Some((e, d)) = self.dp_claim {
            s.push_str(&format!("dp_epsilon = {e}\ndp_delta = {d}\n"));
        }
        s
    }
}
