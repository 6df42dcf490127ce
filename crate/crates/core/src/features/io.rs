//! Binary feature matrix files.
//!
//! ```text
//! magic      8 bytes  "ACFEAT01"
//! header_len u32 LE
//! header     JSON {version, rows, cols, dtype: "f64le", layout_hash, labels, blocks}
//! data       rows * cols f64 LE, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ACFEAT01";
const VERSION: u32 = 1;
const DTYPE: &str = "f64le";

/// Labeled feature rows tied to the layout that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub layout_hash: String,
    /// Workload label per row.
    pub labels: Vec<String>,
    /// Source block index (within its workload) per row.
    pub blocks: Vec<usize>,
    pub data: Array2<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    rows: usize,
    cols: usize,
    dtype: String,
    layout_hash: String,
    labels: Vec<String>,
    blocks: Vec<usize>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn check_layout(&self, expected: &str) -> Result<()> {
        if self.layout_hash != expected {
            return Err(Error::LayoutMismatch {
                expected: expected.to_string(),
                got: self.layout_hash.clone(),
            });
        }
        Ok(())
    }

    /// Row indices in their stored order whose label satisfies `keep`.
    pub fn rows_where(&self, mut keep: impl FnMut(&str) -> bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| keep(&self.labels[i])).collect()
    }

    pub fn select(&self, rows: &[usize]) -> FeatureSet {
        FeatureSet {
            layout_hash: self.layout_hash.clone(),
            labels: rows.iter().map(|&i| self.labels[i].clone()).collect(),
            blocks: rows.iter().map(|&i| self.blocks[i]).collect(),
            data: self.data.select(ndarray::Axis(0), rows),
        }
    }

    /// Concatenates sets that share a layout.
    pub fn concat(parts: &[FeatureSet]) -> Result<FeatureSet> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("no feature sets to concatenate".into()))?;
        for p in parts {
            p.check_layout(&first.layout_hash)?;
        }
        let views: Vec<_> = parts.iter().map(|p| p.data.view()).collect();
        let data = ndarray::concatenate(ndarray::Axis(0), &views).map_err(|e| {
            Error::ShapeMismatch {
                expected: format!("{} columns", first.dim()),
                got: e.to_string(),
            }
        })?;
        Ok(FeatureSet {
            layout_hash: first.layout_hash.clone(),
            labels: parts.iter().flat_map(|p| p.labels.iter().cloned()).collect(),
            blocks: parts.iter().flat_map(|p| p.blocks.iter().copied()).collect(),
            data,
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            version: VERSION,
            rows: self.data.nrows(),
            cols: self.data.ncols(),
            dtype: DTYPE.into(),
            layout_hash: self.layout_hash.clone(),
            labels: self.labels.clone(),
            blocks: self.blocks.clone(),
        };
        let header = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in self.data.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let corrupt = |what: &str| Error::CorruptBundle(format!("feature file: {what}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| corrupt("truncated magic"))?;
        if &magic != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len).map_err(|_| corrupt("truncated header"))?;
        let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut header).map_err(|_| corrupt("truncated header"))?;
        let header: Header = serde_json::from_slice(&header)?;
        if header.version != VERSION {
            return Err(Error::VersionMismatch {
                found: header.version,
                expected: VERSION,
            });
        }
        if header.dtype != DTYPE
            || header.labels.len() != header.rows
            || header.blocks.len() != header.rows
        {
            return Err(corrupt("inconsistent header"));
        }
        let mut raw = vec![0u8; header.rows * header.cols * 8];
        r.read_exact(&mut raw).map_err(|_| corrupt("truncated data"))?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let data = Array2::from_shape_vec((header.rows, header.cols), values)
            .map_err(|_| corrupt("shape"))?;
        Ok(Self {
            layout_hash: header.layout_hash,
            labels: header.labels,
            blocks: header.blocks,
            data,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureSet {
        FeatureSet {
            layout_hash: "abc".into(),
            labels: vec!["a".into(), "b".into()],
            blocks: vec![0, 3],
            data: ndarray::arr2(&[[1.0, -2.5, 0.0], [f64::MIN_POSITIVE, 7.0, 1e300]]),
        }
    }

    #[test]
    fn roundtrip() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        assert_eq!(FeatureSet::read_from(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            FeatureSet::read_from(buf.as_slice()),
            Err(Error::CorruptBundle(_))
        ));
    }

    #[test]
    fn layout_check_and_select() {
        let set = sample();
        assert!(set.check_layout("abc").is_ok());
        assert!(matches!(set.check_layout("xyz"), Err(Error::LayoutMismatch { .. })));
        let b = set.select(&set.rows_where(|l| l == "b"));
        assert_eq!(b.labels, vec!["b".to_string()]);
        assert_eq!(b.data.row(0)[1], 7.0);
        let both = FeatureSet::concat(&[b.clone(), set.select(&[0])]).unwrap();
        assert_eq!(both.labels, vec!["b".to_string(), "a".to_string()]);
    }
}
