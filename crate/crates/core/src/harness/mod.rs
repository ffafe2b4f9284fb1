//! Scenario runner: corpus generation, stage orchestration over files,
//! baselines and utility metrics.

pub mod baseline;
pub mod corpus;
pub mod keys;
pub mod pipeline;
pub mod scenario;

use std::path::Path;

use thiserror::Error;

use crate::batch::BatchError;
use crate::config::ConfigError;
use crate::encoder::EncoderError;
use crate::shuffler::ShufflerError;

pub use baseline::{detection_count, partitioned_baseline, rr_baseline, BaselineOutcome};
pub use corpus::{generate_flix_corpus, generate_perms_corpus, generate_zipf_corpus, Corpus, Workload};
pub use keys::Keys;
pub use pipeline::{
    analyze_stage, encode_corpus, generate_corpus, ground_truth, run_scenario, shuffle2_stage, shuffle_stage,
    AnalysisOut, ScenarioOutcome, StageReport, UtilityReport,
};
pub use scenario::{Analysis, ScenarioConfig, PRESETS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("stage `{stage}` failed: {cause}")]
    StageFailed {
        stage: &'static str,
        cause: Box<HarnessError>,
    },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Shuffler(#[from] ShufflerError),
    #[error(transparent)]
    Batch(#[from] BatchError),
}

impl HarnessError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }

    pub fn in_stage(stage: &'static str) -> impl FnOnce(HarnessError) -> HarnessError {
        move |e| HarnessError::StageFailed {
            stage,
            cause: Box::new(e),
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e.to_string())
    }
}
