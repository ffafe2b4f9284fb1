//! Simulated enclave memory: instrumented untrusted arrays and a
//! byte-budgeted private arena.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::StashError;
use crate::batch::RecordBatch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Input,
    Mid,
    Output,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Input => "in",
            Region::Mid => "mid",
            Region::Output => "out",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Distribute,
    Drain,
    Compress,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Distribute => "distribute",
            Phase::Drain => "drain",
            Phase::Compress => "compress",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Read,
    Write,
}

/// One access to untrusted memory; offsets and lengths are in bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Access {
    pub phase: Phase,
    pub region: Region,
    pub offset: u64,
    pub len: u32,
    pub op: Op,
}

impl fmt::Display for Access {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.phase.as_str(),
            self.region.as_str(),
            self.offset,
            self.len,
            match self.op {
                Op::Read => "read",
                Op::Write => "write",
            }
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub accesses: Vec<Access>,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }

    pub fn extend(&mut self, other: Trace) {
        self.accesses.extend(other.accesses);
    }

    /// `phase,region,offset,len,op`, one line per access.
    pub fn dump(&self) -> String {
        let mut s = String::with_capacity(self.accesses.len() * 28);
        for a in &self.accesses {
            s.push_str(&a.to_string());
            s.push('\n');
        }
        s
    }
}

/// Fixed-width records in untrusted memory. Every access is logged to the
/// caller's trace.
#[derive(Clone, Debug)]
pub struct UntrustedArray {
    region: Region,
    record_len: usize,
    data: Vec<u8>,
}

impl UntrustedArray {
    pub fn new(region: Region, record_len: usize, count: usize) -> Self {
        UntrustedArray {
            region,
            record_len,
            data: vec![0; record_len * count],
        }
    }

    pub fn from_batch(region: Region, batch: RecordBatch) -> Self {
        let record_len = batch.record_len();
        UntrustedArray {
            region,
            record_len,
            data: batch.as_bytes().to_vec(),
        }
    }

    pub fn into_batch(self) -> RecordBatch {
        let mut b = RecordBatch::with_capacity(self.record_len, self.len());
        for r in self.data.chunks_exact(self.record_len.max(1)) {
            b.push(r).expect("record width matches");
        }
        b
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn record_len(&self) -> usize {
        self.record_len
    }

    pub fn len(&self) -> usize {
        if self.record_len == 0 {
            0
        } else {
            self.data.len() / self.record_len
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn access(&self, phase: Phase, idx: usize, op: Op) -> Access {
        Access {
            phase,
            region: self.region,
            offset: (idx * self.record_len) as u64,
            len: self.record_len as u32,
            op,
        }
    }

    pub fn read(&self, phase: Phase, idx: usize, trace: &mut Trace) -> &[u8] {
        trace.accesses.push(self.access(phase, idx, Op::Read));
        &self.data[idx * self.record_len..(idx + 1) * self.record_len]
    }

    pub fn write(&mut self, phase: Phase, idx: usize, record: &[u8], trace: &mut Trace) {
        assert_eq!(record.len(), self.record_len, "record width");
        trace.accesses.push(self.access(phase, idx, Op::Write));
        self.data[idx * self.record_len..(idx + 1) * self.record_len].copy_from_slice(record);
    }

    /// Untraced view, for tests and for persisting scratch copies.
    pub fn peek(&self, idx: usize) -> &[u8] {
        &self.data[idx * self.record_len..(idx + 1) * self.record_len]
    }
}

#[derive(Debug)]
struct ArenaState {
    budget: usize,
    in_use: AtomicUsize,
    peak: AtomicUsize,
}

/// Byte-budgeted private memory. Structures reserve their full capacity up
/// front; a reservation that would exceed the budget fails.
#[derive(Clone, Debug)]
pub struct PrivateArena {
    state: Arc<ArenaState>,
}

impl PrivateArena {
    pub fn new(budget: usize) -> Self {
        PrivateArena {
            state: Arc::new(ArenaState {
                budget,
                in_use: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            }),
        }
    }

    pub fn budget(&self) -> usize {
        self.state.budget
    }

    pub fn in_use(&self) -> usize {
        self.state.in_use.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.state.peak.load(Ordering::SeqCst)
    }

    pub fn reserve(&self, bytes: usize) -> Result<Reservation, StashError> {
        let s = &self.state;
        let mut cur = s.in_use.load(Ordering::SeqCst);
        loop {
            let next = cur + bytes;
            if next > s.budget {
                return Err(StashError::PrivateMemory {
                    requested: bytes,
                    in_use: cur,
                    budget: s.budget,
                });
            }
            match s.in_use.compare_exchange(cur, next, Ordering::SeqCst, Ordering::SeqCst) {
                Ok(_) => {
                    s.peak.fetch_max(next, Ordering::SeqCst);
                    return Ok(Reservation {
                        arena: self.clone(),
                        bytes,
                    });
                }
                Err(actual) => cur = actual,
            }
        }
    }
}

/// Released on drop.
#[derive(Debug)]
pub struct Reservation {
    arena: PrivateArena,
    bytes: usize,
}

impl Reservation {
    pub fn bytes(&self) -> usize {
        self.bytes
    }
}

impl Drop for Reservation {
    fn drop(&mut self) {
        self.arena.state.in_use.fetch_sub(self.bytes, Ordering::SeqCst);
    }
}
