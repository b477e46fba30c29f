use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};

use crate::{Error, Real, Result};

/// Fixed-length vectors kept in memory, or in an anonymous temporary file
/// when they would exceed the memory budget.
pub enum SnapshotStore<T> {
    Memory(Vec<Vec<T>>),
    Disk { file: File, len: usize, count: usize },
}

fn io(e: std::io::Error) -> Error {
    Error::Domain(format!("snapshot storage: {e}"))
}

impl<T: Real> SnapshotStore<T> {
    /// Chooses the backing from `count × len` values against `budget_bytes`.
    pub fn new(count: usize, len: usize, budget_bytes: usize) -> Result<Self> {
        if count.saturating_mul(len).saturating_mul(8) <= budget_bytes {
            Ok(Self::Memory(vec![Vec::new(); count]))
        } else {
            let file = tempfile::tempfile().map_err(io)?;
            file.set_len((count * len * 8) as u64).map_err(io)?;
            Ok(Self::Disk { file, len, count })
        }
    }

    pub fn is_on_disk(&self) -> bool {
        matches!(self, Self::Disk { .. })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Memory(v) => v.len(),
            Self::Disk { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&mut self, i: usize) -> Result<Vec<T>> {
        match self {
            Self::Memory(v) => Ok(v[i].clone()),
            Self::Disk { file, len, .. } => {
                let mut buf = vec![0u8; *len * 8];
                file.seek(SeekFrom::Start((i * *len * 8) as u64)).map_err(io)?;
                file.read_exact(&mut buf).map_err(io)?;
                Ok(buf
                    .chunks_exact(8)
                    .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
                    .collect())
            }
        }
    }

    pub fn set(&mut self, i: usize, values: Vec<T>) -> Result<()> {
        match self {
            Self::Memory(v) => {
                v[i] = values;
                Ok(())
            }
            Self::Disk { file, len, .. } => {
                assert_eq!(values.len(), *len, "snapshot length");
                let buf: Vec<u8> = values.iter().flat_map(|v| v.as_f64().to_le_bytes()).collect();
                file.seek(SeekFrom::Start((i * *len * 8) as u64)).map_err(io)?;
                file.write_all(&buf).map_err(io)
            }
        }
    }
}
