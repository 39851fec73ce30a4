//! Binary tensor container used to exchange score maps and gradient stacks.
//!
//! Layout (all integers little-endian):
//!
//! | bytes        | content                         |
//! |--------------|---------------------------------|
//! | 0..4         | magic `SMT1`                    |
//! | 4..8         | `u32` version, currently 1      |
//! | 8..12        | `u32` number of dims `n`        |
//! | 12..12+4n    | `n` x `u32` extents             |
//! | rest         | `f32` payload, last dim fastest |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SMT1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl TensorFile {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected = element_count(&dims)?;
        if expected != data.len() {
            return Err(Error::InvalidArgument(format!(
                "dims {dims:?} require {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(12 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&u32_of(self.dims.len(), &self.dims)?.to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&u32_of(d, &self.dims)?.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = Cursor { bytes, pos: 0 };
        let magic = cursor.take(4)?;
        if magic != MAGIC {
            let mut found = [0u8; 4];
            found.copy_from_slice(magic);
            return Err(Error::MagicMismatch { found });
        }
        let version = cursor.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let ndim = cursor.u32()? as usize;
        let mut raw_dims = Vec::with_capacity(ndim.min(64));
        for _ in 0..ndim {
            raw_dims.push(cursor.u32()? as u64);
        }
        let dims: Vec<usize> = raw_dims.iter().map(|&d| d as usize).collect();
        let count = element_count(&dims)?;
        let expected = count.checked_mul(4).ok_or(Error::DimOverflow { dims: raw_dims })?;
        let rest = &bytes[cursor.pos..];
        if rest.len() < expected {
            return Err(Error::TruncatedPayload {
                expected,
                found: rest.len(),
            });
        }
        if rest.len() > expected {
            return Err(Error::TrailingBytes {
                extra: rest.len() - expected,
            });
        }
        let data = rest
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { dims, data })
    }
}

fn element_count(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n.checked_mul(4).is_some())
        .ok_or_else(|| Error::DimOverflow {
            dims: dims.iter().map(|&d| d as u64).collect(),
        })
}

fn u32_of(v: usize, dims: &[usize]) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::DimOverflow {
        dims: dims.iter().map(|&d| d as u64).collect(),
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::TruncatedPayload {
                expected: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<TensorFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    TensorFile::from_bytes(&bytes)
}

pub fn write_tensor(t: &TensorFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, t.to_bytes()?).map_err(|e| Error::io(path, e))
}
