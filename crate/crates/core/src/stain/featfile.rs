//! `MILF` binary feature files.
//!
//! Little-endian: magic `MILF`, `u32` version (1), `u32` rows, `u32`
//! columns, then rows*columns `f32` values in row-major order. Row
//! descriptors live next to the file in `<stem>.index.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"MILF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Where a feature row came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowIndex {
    pub slide_id: String,
    pub grid_x: u32,
    pub grid_y: u32,
    pub patch_x: u32,
    pub patch_y: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n: usize,
    pub d: usize,
    pub values: Vec<f32>,
    pub index: Vec<RowIndex>,
}

impl FeatureMatrix {
    pub fn new(d: usize, values: Vec<f32>, index: Vec<RowIndex>) -> Result<Self> {
        if d == 0 || values.len() % d != 0 {
            return Err(Error::DimensionMismatch(format!("{} values with d = {d}", values.len())));
        }
        let n = values.len() / d;
        if !index.is_empty() && index.len() != n {
            return Err(Error::DimensionMismatch(format!("{} index rows for {n} feature rows", index.len())));
        }
        let m = Self { n, d, values, index };
        m.check_finite()?;
        Ok(m)
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFiniteValue { row: i / self.d, col: i % self.d }),
            None => Ok(()),
        }
    }
}

/// `features.milf` -> `features.index.json`.
pub fn index_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.index.json"))
}

pub fn encode_features(m: &FeatureMatrix) -> Result<Vec<u8>> {
    m.check_finite()?;
    let mut buf = Vec::with_capacity(HEADER_LEN + m.values.len() * 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.n as u32).to_le_bytes());
    buf.extend_from_slice(&(m.d as u32).to_le_bytes());
    for v in &m.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

/// Parses the binary payload; the row index is left empty.
pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(Error::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(Error::TruncatedFile { expected: HEADER_LEN, found: bytes.len() });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = word(4);
    if version != VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let (n, d) = (word(8) as usize, word(12) as usize);
    let expected = n * d * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::TruncatedFile { expected, found: payload.len() });
    }
    if payload.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after {n}x{d} values",
            payload.len() - expected
        )));
    }
    let values: Vec<f32> =
        payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let m = FeatureMatrix { n, d, values, index: Vec::new() };
    m.check_finite()?;
    Ok(m)
}

pub fn write_features(m: &FeatureMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode_features(m)?)?;
    fs::write(index_path(path), serde_json::to_string(&m.index)?)?;
    Ok(())
}

/// Reads a feature file and, when present, its companion index.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut m = decode_features(&fs::read(path)?)?;
    let idx = index_path(path);
    if idx.is_file() {
        let index: Vec<RowIndex> = serde_json::from_str(&fs::read_to_string(idx)?)?;
        if index.len() != m.n {
            return Err(Error::DimensionMismatch(format!("{} index rows for {} feature rows", index.len(), m.n)));
        }
        m.index = index;
    }
    Ok(m)
}
