//! Fixed-width record arrays and the batch file framing used for every
//! stage handoff.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::format::{BATCH_HEADER_LEN, BATCH_MAGIC};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad batch magic")]
    BadMagic,
    #[error("batch truncated: expected {expected} record bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("record of {got} bytes in a batch of {expected}-byte records")]
    RecordLength { expected: usize, got: usize },
}

/// A contiguous array of equal-length records.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecordBatch {
    record_len: usize,
    data: Vec<u8>,
}

impl RecordBatch {
    pub fn new(record_len: usize) -> Self {
        RecordBatch {
            record_len,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(record_len: usize, count: usize) -> Self {
        RecordBatch {
            record_len,
            data: Vec::with_capacity(record_len * count),
        }
    }

    /// A batch of `count` zeroed records.
    pub fn zeroed(record_len: usize, count: usize) -> Self {
        RecordBatch {
            record_len,
            data: vec![0; record_len * count],
        }
    }

    pub fn from_records<I, R>(record_len: usize, records: I) -> Result<Self, BatchError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[u8]>,
    {
        let mut batch = RecordBatch::new(record_len);
        for r in records {
            batch.push(r.as_ref())?;
        }
        Ok(batch)
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

    pub fn get(&self, i: usize) -> &[u8] {
        &self.data[i * self.record_len..(i + 1) * self.record_len]
    }

    pub fn set(&mut self, i: usize, record: &[u8]) {
        assert_eq!(record.len(), self.record_len);
        self.data[i * self.record_len..(i + 1) * self.record_len].copy_from_slice(record);
    }

    pub fn push(&mut self, record: &[u8]) -> Result<(), BatchError> {
        if record.len() != self.record_len {
            return Err(BatchError::RecordLength {
                expected: self.record_len,
                got: record.len(),
            });
        }
        self.data.extend_from_slice(record);
        Ok(())
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        let len = self.record_len.max(1);
        self.data.chunks_exact(len).take(self.len())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), BatchError> {
        w.write_all(&BATCH_MAGIC)?;
        w.write_all(&(self.record_len as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.data)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, BatchError> {
        let mut header = [0u8; BATCH_HEADER_LEN];
        r.read_exact(&mut header)?;
        if header[..8] != BATCH_MAGIC {
            return Err(BatchError::BadMagic);
        }
        let record_len = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
        let expected = record_len as u64 * count;
        let mut data = Vec::new();
        r.take(expected).read_to_end(&mut data)?;
        if data.len() as u64 != expected {
            return Err(BatchError::Truncated {
                expected,
                found: data.len() as u64,
            });
        }
        Ok(RecordBatch { record_len, data })
    }

    pub fn save(&self, path: &Path) -> Result<(), BatchError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self, BatchError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_layout() {
        let b = RecordBatch::from_records(3, [b"abc", b"def"]).unwrap();
        let mut bytes = Vec::new();
        b.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"ESABATCH");
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &2u64.to_le_bytes());
        assert_eq!(&bytes[20..], b"abcdef");
        assert_eq!(RecordBatch::read_from(&bytes[..]).unwrap(), b);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let b = RecordBatch::from_records(2, [b"ab", b"cd"]).unwrap();
        let mut bytes = Vec::new();
        b.write_to(&mut bytes).unwrap();
        assert!(matches!(
            RecordBatch::read_from(&bytes[..bytes.len() - 1]),
            Err(BatchError::Truncated { .. })
        ));
        bytes[0] = b'X';
        assert!(matches!(RecordBatch::read_from(&bytes[..]), Err(BatchError::BadMagic)));
    }

    #[test]
    fn wrong_width_rejected() {
        let mut b = RecordBatch::new(4);
        assert!(b.push(b"abc").is_err());
        assert!(b.is_empty());
    }
}
