//! Stash Shuffle parameters and their derivation.

use super::StashError;
use crate::format::TAG_LEN;

/// Default private memory: enough for a two-bucket private sort of 152,000
/// 318-byte records.
pub const DEFAULT_PRIVATE_MEM_BUDGET: usize = 96_672_000;
pub const DEFAULT_MAX_ATTEMPTS: usize = 8;

/// How the per-(input, output) chunk cap C is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChunkCap {
    /// `C = ⌈D/B + α·√(D/B)⌉`
    Alpha(f64),
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamRequest {
    pub n_items: usize,
    pub num_buckets: usize,
    pub chunk: ChunkCap,
    pub stash_cap: usize,
    pub window: usize,
    pub private_mem_budget: usize,
    /// Bytes of one decrypted item held in private memory.
    pub item_len: usize,
    pub workers: usize,
    pub queue_cap: Option<usize>,
    pub max_attempts: usize,
}

impl ParamRequest {
    pub fn new(n_items: usize, num_buckets: usize, chunk: ChunkCap, stash_cap: usize, window: usize) -> Self {
        ParamRequest {
            n_items,
            num_buckets,
            chunk,
            stash_cap,
            window,
            private_mem_budget: DEFAULT_PRIVATE_MEM_BUDGET,
            item_len: 0,
            workers: 1,
            queue_cap: None,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn item_len(mut self, item_len: usize) -> Self {
        self.item_len = item_len;
        self
    }

    pub fn budget(mut self, bytes: usize) -> Self {
        self.private_mem_budget = bytes;
        self
    }

    pub fn workers(mut self, p: usize) -> Self {
        self.workers = p;
        self
    }

    pub fn queue_cap(mut self, cap: usize) -> Self {
        self.queue_cap = Some(cap);
        self
    }

    pub fn max_attempts(mut self, n: usize) -> Self {
        self.max_attempts = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShuffleParams {
    /// N
    pub n_items: usize,
    /// B
    pub num_buckets: usize,
    /// D = ⌈N/B⌉
    pub bucket_size: usize,
    /// C
    pub chunk_cap: usize,
    /// S
    pub stash_cap: usize,
    /// W
    pub window: usize,
    /// K = ⌈S/B⌉
    pub drain_per_bucket: usize,
    /// α implied by C.
    pub alpha: f64,
    pub private_mem_budget: usize,
    pub item_len: usize,
    pub workers: usize,
    /// Real items the compression queue may hold.
    pub queue_cap: usize,
    pub max_attempts: usize,
    /// log10 of the security parameter, when known from external analysis.
    pub log_epsilon: Option<f64>,
}

pub fn div_ceil(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// `(C - D/B) / √(D/B)`
pub fn implied_alpha(bucket_size: usize, num_buckets: usize, chunk_cap: usize) -> f64 {
    let mean = bucket_size as f64 / num_buckets as f64;
    (chunk_cap as f64 - mean) / mean.sqrt()
}

pub fn chunk_cap_for_alpha(bucket_size: usize, num_buckets: usize, alpha: f64) -> usize {
    let mean = bucket_size as f64 / num_buckets as f64;
    ((mean + alpha * mean.sqrt()).ceil() as usize).max(1)
}

pub fn derive_params(req: &ParamRequest) -> Result<ShuffleParams, StashError> {
    let (n, b) = (req.n_items, req.num_buckets);
    if b < 2 {
        return Err(StashError::InvalidParams("need at least 2 buckets".into()));
    }
    if n < b {
        return Err(StashError::InvalidParams(format!(
            "n_items {n} smaller than num_buckets {b}"
        )));
    }
    if req.window == 0 {
        return Err(StashError::InvalidParams("window must be at least 1".into()));
    }
    if req.workers == 0 || req.workers > b {
        return Err(StashError::InvalidParams(format!("workers must be in [1, {b}]")));
    }
    if req.max_attempts == 0 {
        return Err(StashError::InvalidParams("max_attempts must be at least 1".into()));
    }
    let d = div_ceil(n, b);
    let (c, alpha) = match req.chunk {
        ChunkCap::Alpha(a) => {
            if !a.is_finite() {
                return Err(StashError::InvalidParams("alpha must be finite".into()));
            }
            let c = chunk_cap_for_alpha(d, b, a);
            (c, a)
        }
        ChunkCap::Fixed(0) => return Err(StashError::InvalidParams("chunk cap must be at least 1".into())),
        ChunkCap::Fixed(c) => (c, implied_alpha(d, b, c)),
    };
    let window = req.window.min(b);
    let p = ShuffleParams {
        n_items: n,
        num_buckets: b,
        bucket_size: d,
        chunk_cap: c,
        stash_cap: req.stash_cap,
        window: req.window,
        drain_per_bucket: div_ceil(req.stash_cap, b),
        alpha,
        private_mem_budget: req.private_mem_budget,
        item_len: req.item_len,
        workers: req.workers,
        queue_cap: req.queue_cap.unwrap_or((window + 1) * d),
        max_attempts: req.max_attempts,
        log_epsilon: None,
    };
    let ws = p.working_set();
    if ws > p.private_mem_budget {
        return Err(StashError::BudgetExceeded {
            working_set: ws,
            budget: p.private_mem_budget,
        });
    }
    Ok(p)
}

impl ShuffleParams {
    /// min(W, B)
    pub fn effective_window(&self) -> usize {
        self.window.min(self.num_buckets)
    }

    /// Drain slots per output bucket owned by one worker.
    pub fn worker_drain(&self) -> usize {
        div_ceil(self.drain_per_bucket, self.workers)
    }

    pub fn worker_stash_cap(&self) -> usize {
        div_ceil(self.stash_cap, self.workers)
    }

    /// Input buckets handled by each worker, as contiguous ranges.
    pub fn worker_buckets(&self, worker: usize) -> std::ops::Range<usize> {
        let per = div_ceil(self.num_buckets, self.workers);
        let lo = (worker * per).min(self.num_buckets);
        lo..((worker + 1) * per).min(self.num_buckets)
    }

    /// Slots of one intermediate bucket: B·C chunk slots plus the drain area.
    pub fn mid_bucket_len(&self) -> usize {
        self.num_buckets * self.chunk_cap + self.workers * self.worker_drain()
    }

    pub fn mid_len(&self) -> usize {
        self.num_buckets * self.mid_bucket_len()
    }

    /// Position of slot `k` of intermediate bucket `j`.
    pub fn mid_idx(&self, j: usize, k: usize) -> usize {
        j * self.mid_bucket_len() + k
    }

    /// Real items in output bucket `j`; the last one absorbs the remainder.
    pub fn output_bucket_len(&self, j: usize) -> usize {
        if j + 1 < self.num_buckets {
            self.bucket_size
        } else {
            self.n_items - (self.num_buckets - 1) * self.bucket_size
        }
    }

    /// Flag byte, item and AEAD tag.
    pub fn mid_record_len(&self) -> usize {
        1 + self.item_len + TAG_LEN
    }

    fn slot_bytes(&self) -> usize {
        self.item_len + 1
    }

    pub fn distribution_working_set(&self) -> usize {
        let (d, b, c) = (self.bucket_size, self.num_buckets, self.chunk_cap);
        let per_worker = (d + b * c + self.worker_stash_cap()) * self.slot_bytes() + (d + b) * 4;
        self.workers * per_worker
    }

    pub fn compression_working_set(&self) -> usize {
        let m = self.mid_bucket_len();
        (m + self.queue_cap) * self.slot_bytes() + m * 4
    }

    pub fn working_set(&self) -> usize {
        self.distribution_working_set().max(self.compression_working_set())
    }

    pub fn analytic_overhead(&self) -> f64 {
        super::overhead::analytic_overhead(self.n_items, self.num_buckets, self.chunk_cap, self.stash_cap)
    }
}
