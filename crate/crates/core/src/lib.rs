//! Encode-shuffle-analyze: client encoders, an oblivious shuffler with crowd
//! thresholding, and the analyzer, plus a scenario harness.

pub mod analyzer;
pub mod batch;
pub mod config;
pub mod crypto;
pub mod encoder;
pub mod format;
pub mod harness;
pub mod rng;
pub mod shuffler;
pub mod stash;

pub use analyzer::{CovarianceAccumulators, DecodeStats, Histogram};
pub use batch::{BatchError, RecordBatch};
pub use config::{ConfigError, KvConfig};
pub use crypto::{BlindingSecret, GroupElement, KeyPair};
pub use encoder::{CrowdId, CrowdIdKind, CrowdIdMode, Report};
pub use harness::{HarnessError, Keys, ScenarioConfig, UtilityReport};
pub use rng::RngTape;
pub use shuffler::{ShufflerStats, ThresholdMode, ThresholdPolicy};
pub use stash::{derive_params, ChunkCap, ParamRequest, ShuffleParams, StashError};
