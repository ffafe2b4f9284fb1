//! The Stash Shuffle: distribution into capped chunks with a stash, a final
//! stash drain, and windowed compression.

use std::collections::VecDeque;
use std::path::PathBuf;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::memory::{Phase, PrivateArena, Region, Trace, UntrustedArray};
use super::params::ShuffleParams;
use super::{ShufflePhase, StashError};
use crate::batch::RecordBatch;

/// Converts between untrusted input records, private items and output
/// records.
pub trait ItemCodec: Sync {
    fn input_len(&self) -> usize;
    fn item_len(&self) -> usize;
    fn output_len(&self) -> usize;
    /// Must not fail: a record that does not decrypt becomes a sentinel item
    /// so the number of real items never depends on record contents.
    fn open_input(&self, record: &[u8]) -> Vec<u8>;
    fn seal_output(&self, item: &[u8], rng: &mut dyn RngCore) -> Vec<u8>;
}

/// Records pass through unchanged.
#[derive(Clone, Copy, Debug)]
pub struct PlainCodec {
    pub len: usize,
}

impl ItemCodec for PlainCodec {
    fn input_len(&self) -> usize {
        self.len
    }
    fn item_len(&self) -> usize {
        self.len
    }
    fn output_len(&self) -> usize {
        self.len
    }
    fn open_input(&self, record: &[u8]) -> Vec<u8> {
        record.to_vec()
    }
    fn seal_output(&self, item: &[u8], _rng: &mut dyn RngCore) -> Vec<u8> {
        item.to_vec()
    }
}

/// Per-attempt encryption of intermediate slots. The slot index is the
/// nonce; each slot is written once per attempt.
pub struct MidCipher {
    aead: ChaCha20Poly1305,
    item_len: usize,
}

impl MidCipher {
    pub fn new(key: [u8; 32], item_len: usize) -> Self {
        MidCipher {
            aead: ChaCha20Poly1305::new(Key::from_slice(&key)),
            item_len,
        }
    }

    fn nonce(slot: usize) -> Nonce {
        let mut n = [0u8; 12];
        n[..8].copy_from_slice(&(slot as u64).to_le_bytes());
        *Nonce::from_slice(&n)
    }

    pub fn seal(&self, slot: usize, item: Option<&[u8]>) -> Vec<u8> {
        let mut plain = vec![0u8; 1 + self.item_len];
        if let Some(item) = item {
            plain[0] = 1;
            plain[1..].copy_from_slice(item);
        }
        self.aead
            .encrypt(&Self::nonce(slot), Payload { msg: &plain, aad: &[] })
            .expect("chacha20poly1305 encryption is infallible for small inputs")
    }

    /// `Ok(None)` for a dummy.
    pub fn open(&self, slot: usize, record: &[u8]) -> Result<Option<Vec<u8>>, StashError> {
        let mut plain = self
            .aead
            .decrypt(&Self::nonce(slot), Payload { msg: record, aad: &[] })
            .map_err(|_| StashError::Tampered { slot })?;
        if plain.len() != 1 + self.item_len {
            return Err(StashError::Tampered { slot });
        }
        Ok(if plain[0] == 1 {
            plain.remove(0);
            Some(plain)
        } else {
            None
        })
    }
}

/// Overflow items waiting for their target bucket.
#[derive(Clone, Debug)]
pub struct Stash {
    queues: Vec<VecDeque<Vec<u8>>>,
    len: usize,
    cap: usize,
}

impl Stash {
    pub fn new(num_buckets: usize, cap: usize) -> Self {
        Stash {
            queues: vec![VecDeque::new(); num_buckets],
            len: 0,
            cap,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn queued_for(&self, target: usize) -> usize {
        self.queues[target].len()
    }

    /// False when full.
    pub fn push(&mut self, target: usize, item: Vec<u8>) -> bool {
        if self.len >= self.cap {
            return false;
        }
        self.queues[target].push_back(item);
        self.len += 1;
        true
    }

    pub fn pop(&mut self, target: usize) -> Option<Vec<u8>> {
        let item = self.queues[target].pop_front()?;
        self.len -= 1;
        Some(item)
    }
}

/// Target bucket of each of `d` items, each chosen independently and
/// uniformly.
pub fn shuffle_to_buckets<R: Rng + ?Sized>(num_buckets: usize, d: usize, rng: &mut R) -> Vec<usize> {
    (0..d).map(|_| rng.gen_range(0..num_buckets)).collect()
}

/// Splits one input bucket into `B` chunks of at most `C` items: stashed
/// items first, then fresh ones, overflow to the stash. `None` marks a
/// padding slot past the end of the input.
pub fn route_bucket(
    stash: &mut Stash,
    bucket: usize,
    targets: &[usize],
    items: Vec<Option<Vec<u8>>>,
    chunk_cap: usize,
) -> Result<Vec<Vec<Vec<u8>>>, StashError> {
    let b = stash.queues.len();
    let mut chunks: Vec<Vec<Vec<u8>>> = (0..b).map(|_| Vec::with_capacity(chunk_cap)).collect();
    for (j, chunk) in chunks.iter_mut().enumerate() {
        while chunk.len() < chunk_cap {
            match stash.pop(j) {
                Some(item) => chunk.push(item),
                None => break,
            }
        }
    }
    for (&t, item) in targets.iter().zip(items) {
        let Some(item) = item else { continue };
        if chunks[t].len() < chunk_cap {
            chunks[t].push(item);
        } else if !stash.push(t, item) {
            return Err(StashError::StashOverflow { bucket });
        }
    }
    Ok(chunks)
}

type Writes = Vec<(usize, Vec<u8>)>;

/// Reads input bucket `b`, routes it and returns the sealed chunk writes.
#[allow(clippy::too_many_arguments)]
pub fn distribute_bucket(
    stash: &mut Stash,
    b: usize,
    targets: &[usize],
    input: &UntrustedArray,
    params: &ShuffleParams,
    codec: &dyn ItemCodec,
    cipher: &MidCipher,
    trace: &mut Trace,
) -> Result<Writes, StashError> {
    let (d, c) = (params.bucket_size, params.chunk_cap);
    let items: Vec<Option<Vec<u8>>> = (0..d)
        .map(|i| {
            let idx = b * d + i;
            (idx < params.n_items).then(|| codec.open_input(input.read(Phase::Distribute, idx, trace)))
        })
        .collect();
    let chunks = route_bucket(stash, b, targets, items, c)?;
    let mut writes = Vec::with_capacity(params.num_buckets * c);
    for (j, chunk) in chunks.iter().enumerate() {
        for i in 0..c {
            let slot = params.mid_idx(j, b * c + i);
            writes.push((slot, cipher.seal(slot, chunk.get(i).map(Vec::as_slice))));
        }
    }
    Ok(writes)
}

/// Writes `K` items per output bucket (per worker), real ones first.
pub fn drain_stash(
    stash: &mut Stash,
    worker: usize,
    params: &ShuffleParams,
    cipher: &MidCipher,
) -> Result<Writes, StashError> {
    let k = params.worker_drain();
    if let Some(j) = (0..params.num_buckets).find(|&j| stash.queued_for(j) > k) {
        return Err(StashError::DrainOverflow { bucket: j });
    }
    let base = params.num_buckets * params.chunk_cap + worker * k;
    let mut writes = Vec::with_capacity(params.num_buckets * k);
    for j in 0..params.num_buckets {
        for i in 0..k {
            let slot = params.mid_idx(j, base + i);
            let item = stash.pop(j);
            writes.push((slot, cipher.seal(slot, item.as_deref())));
        }
    }
    debug_assert!(stash.is_empty());
    Ok(writes)
}

struct WorkerLog {
    buckets: Vec<(Trace, Writes)>,
    drain: Writes,
}

fn run_worker(
    worker: usize,
    seed: [u8; 32],
    input: &UntrustedArray,
    params: &ShuffleParams,
    codec: &dyn ItemCodec,
    cipher: &MidCipher,
) -> Result<WorkerLog, StashError> {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut stash = Stash::new(params.num_buckets, params.worker_stash_cap());
    let mut buckets = Vec::new();
    for b in params.worker_buckets(worker) {
        let targets = shuffle_to_buckets(params.num_buckets, params.bucket_size, &mut rng);
        let mut reads = Trace::new();
        let writes = distribute_bucket(&mut stash, b, &targets, input, params, codec, cipher, &mut reads)?;
        buckets.push((reads, writes));
    }
    let drain = drain_stash(&mut stash, worker, params, cipher)?;
    Ok(WorkerLog { buckets, drain })
}

/// Distribution and drain over all workers. Writes are replayed in bucket
/// order, so threading does not change the trace.
pub fn distribute_all(
    input: &UntrustedArray,
    params: &ShuffleParams,
    codec: &dyn ItemCodec,
    cipher: &MidCipher,
    parallel: bool,
    rng: &mut ChaCha20Rng,
    trace: &mut Trace,
) -> Result<UntrustedArray, StashError> {
    let seeds: Vec<[u8; 32]> = (0..params.workers).map(|_| rng.gen()).collect();
    let logs: Vec<Result<WorkerLog, StashError>> = if parallel && params.workers > 1 {
        seeds
            .par_iter()
            .enumerate()
            .map(|(w, s)| run_worker(w, *s, input, params, codec, cipher))
            .collect()
    } else {
        seeds
            .iter()
            .enumerate()
            .map(|(w, s)| run_worker(w, *s, input, params, codec, cipher))
            .collect()
    };
    let logs = logs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut mid = UntrustedArray::new(Region::Mid, params.mid_record_len(), params.mid_len());
    let mut drains = Vec::with_capacity(logs.len());
    for log in logs {
        for (reads, writes) in log.buckets {
            trace.extend(reads);
            for (slot, rec) in writes {
                mid.write(Phase::Distribute, slot, &rec, trace);
            }
        }
        drains.push(log.drain);
    }
    for writes in drains {
        for (slot, rec) in writes {
            mid.write(Phase::Drain, slot, &rec, trace);
        }
    }
    Ok(mid)
}

/// Windowed compression: import `L = min(W, B)` intermediate buckets ahead,
/// emit one output bucket per further import.
pub fn compress(
    mid: &UntrustedArray,
    params: &ShuffleParams,
    codec: &dyn ItemCodec,
    cipher: &MidCipher,
    rng: &mut ChaCha20Rng,
    trace: &mut Trace,
) -> Result<UntrustedArray, StashError> {
    let b_count = params.num_buckets;
    let l = params.effective_window();
    let mut out = UntrustedArray::new(Region::Output, codec.output_len(), params.n_items);
    let mut queue: VecDeque<Vec<u8>> = VecDeque::with_capacity(params.queue_cap);

    let import = |b: usize, queue: &mut VecDeque<Vec<u8>>, rng: &mut ChaCha20Rng, trace: &mut Trace| {
        let m = params.mid_bucket_len();
        let loaded: Vec<&[u8]> = (0..m)
            .map(|k| mid.read(Phase::Compress, params.mid_idx(b, k), trace))
            .collect();
        let mut order: Vec<u32> = (0..m as u32).collect();
        order.shuffle(rng);
        for k in order {
            let slot = params.mid_idx(b, k as usize);
            if let Some(item) = cipher.open(slot, loaded[k as usize])? {
                queue.push_back(item);
            }
        }
        if queue.len() > params.queue_cap {
            return Err(StashError::QueueOverflow { bucket: b });
        }
        Ok(())
    };
    let drain = |b: usize,
                 queue: &mut VecDeque<Vec<u8>>,
                 out: &mut UntrustedArray,
                 rng: &mut ChaCha20Rng,
                 trace: &mut Trace|
     -> Result<(), StashError> {
        let need = params.output_bucket_len(b);
        if queue.len() < need {
            return Err(StashError::QueueUnderflow { bucket: b });
        }
        for i in 0..need {
            let item = queue.pop_front().expect("length checked");
            let rec = codec.seal_output(&item, rng);
            out.write(Phase::Compress, b * params.bucket_size + i, &rec, trace);
        }
        Ok(())
    };

    for b in 0..l {
        import(b, &mut queue, rng, trace)?;
    }
    for b in l..b_count {
        drain(b - l, &mut queue, &mut out, rng, trace)?;
        import(b, &mut queue, rng, trace)?;
    }
    for b in b_count - l..b_count {
        drain(b, &mut queue, &mut out, rng, trace)?;
    }
    debug_assert!(queue.is_empty());
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct ShuffleOptions {
    /// Run distribution workers on the rayon pool.
    pub parallel: bool,
    /// Persist the intermediate array here after distribution.
    pub scratch: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct ShuffleOutput {
    pub output: RecordBatch,
    /// Untrusted accesses of the successful attempt.
    pub trace: Trace,
    pub attempts: usize,
    /// Failures of earlier attempts, in order.
    pub failures: Vec<StashError>,
    pub peak_private: usize,
}

fn check_shapes(input: &UntrustedArray, params: &ShuffleParams, codec: &dyn ItemCodec) -> Result<(), StashError> {
    if input.len() != params.n_items || input.record_len() != codec.input_len() {
        return Err(StashError::InvalidParams(format!(
            "input has {} records of {} bytes, expected {} of {}",
            input.len(),
            input.record_len(),
            params.n_items,
            codec.input_len()
        )));
    }
    if params.item_len != codec.item_len() {
        return Err(StashError::InvalidParams(format!(
            "params item_len {} differs from codec item_len {}",
            params.item_len,
            codec.item_len()
        )));
    }
    Ok(())
}

/// One attempt with a fresh intermediate key.
pub fn shuffle_attempt(
    input: &UntrustedArray,
    params: &ShuffleParams,
    codec: &dyn ItemCodec,
    opts: &ShuffleOptions,
    arena: &PrivateArena,
    rng: &mut ChaCha20Rng,
) -> Result<(UntrustedArray, Trace), StashError> {
    check_shapes(input, params, codec)?;
    let cipher = MidCipher::new(rng.gen(), params.item_len);
    let mut trace = Trace::new();
    let mid = {
        let _ws = arena.reserve(params.distribution_working_set())?;
        distribute_all(input, params, codec, &cipher, opts.parallel, rng, &mut trace)?
    };
    if let Some(path) = &opts.scratch {
        mid.clone()
            .into_batch()
            .save(path)
            .map_err(|e| StashError::Io(e.to_string()))?;
    }
    let _ws = arena.reserve(params.compression_working_set())?;
    let out = compress(&mid, params, codec, &cipher, rng, &mut trace)?;
    Ok((out, trace))
}

/// Shuffles `input`, retrying failed attempts up to `params.max_attempts`.
pub fn stash_shuffle<R: RngCore + ?Sized>(
    input: &RecordBatch,
    params: &ShuffleParams,
    codec: &dyn ItemCodec,
    opts: &ShuffleOptions,
    rng: &mut R,
) -> Result<ShuffleOutput, StashError> {
    let input = UntrustedArray::from_batch(Region::Input, input.clone());
    let arena = PrivateArena::new(params.private_mem_budget);
    let mut failures = Vec::new();
    for attempt in 1..=params.max_attempts {
        let mut attempt_rng = ChaCha20Rng::from_seed(rng.gen());
        match shuffle_attempt(&input, params, codec, opts, &arena, &mut attempt_rng) {
            Ok((out, trace)) => {
                return Ok(ShuffleOutput {
                    output: out.into_batch(),
                    trace,
                    attempts: attempt,
                    failures,
                    peak_private: arena.peak(),
                })
            }
            Err(e) if e.is_retryable() => failures.push(e),
            Err(e) => return Err(e),
        }
    }
    let phase = failures
        .last()
        .and_then(StashError::phase)
        .unwrap_or(ShufflePhase::Distribution);
    Err(StashError::ShuffleFailed {
        phase,
        attempts: params.max_attempts,
    })
}
