//! Oblivious Stash Shuffle over simulated private memory.

pub mod memory;
pub mod overhead;
pub mod params;
pub mod shuffle;

use std::fmt;

use thiserror::Error;

pub use memory::{Access, Op, Phase, PrivateArena, Region, Reservation, Trace, UntrustedArray};
pub use overhead::{analytic_overhead, prior_art_overheads, PriorArtOverheads, Scenario, REFERENCE_SCENARIOS};
pub use params::{derive_params, ChunkCap, ParamRequest, ShuffleParams, DEFAULT_PRIVATE_MEM_BUDGET};
pub use shuffle::{
    compress, distribute_all, distribute_bucket, drain_stash, route_bucket, shuffle_attempt, shuffle_to_buckets,
    stash_shuffle, ItemCodec, MidCipher, PlainCodec, ShuffleOptions, ShuffleOutput, Stash,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShufflePhase {
    Distribution,
    Drain,
    Compression,
}

impl fmt::Display for ShufflePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShufflePhase::Distribution => "distribution",
            ShufflePhase::Drain => "drain",
            ShufflePhase::Compression => "compression",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StashError {
    #[error("invalid shuffle parameters: {0}")]
    InvalidParams(String),
    #[error("working set of {working_set} bytes exceeds the {budget}-byte private memory budget")]
    BudgetExceeded { working_set: usize, budget: usize },
    #[error("private memory exhausted: {requested} bytes requested with {in_use} of {budget} in use")]
    PrivateMemory {
        requested: usize,
        in_use: usize,
        budget: usize,
    },
    #[error("stash full while distributing input bucket {bucket}")]
    StashOverflow { bucket: usize },
    #[error("stash holds more than K items for output bucket {bucket}")]
    DrainOverflow { bucket: usize },
    #[error("compression queue overflow importing bucket {bucket}")]
    QueueOverflow { bucket: usize },
    #[error("compression queue short of items for output bucket {bucket}")]
    QueueUnderflow { bucket: usize },
    #[error("intermediate slot {slot} failed authentication")]
    Tampered { slot: usize },
    #[error("shuffle failed in the {phase} phase after {attempts} attempts")]
    ShuffleFailed { phase: ShufflePhase, attempts: usize },
    #[error("scratch file: {0}")]
    Io(String),
}

impl StashError {
    /// Failures a fresh attempt may avoid.
    pub fn is_retryable(&self) -> bool {
        self.phase().is_some()
    }

    pub fn phase(&self) -> Option<ShufflePhase> {
        match self {
            StashError::StashOverflow { .. } => Some(ShufflePhase::Distribution),
            StashError::DrainOverflow { .. } => Some(ShufflePhase::Drain),
            StashError::QueueOverflow { .. } | StashError::QueueUnderflow { .. } => Some(ShufflePhase::Compression),
            _ => None,
        }
    }
}
