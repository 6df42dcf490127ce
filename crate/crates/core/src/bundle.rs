//! Single-file model bundle.
//!
//! ```text
//! magic          8 bytes  "ACORNBDL"
//! version        u32 LE
//! manifest_len   u32 LE
//! manifest       JSON (hyperparameters, layout, array directory)
//! arrays         f64 LE, concatenated in directory order
//! checksum       SHA-256 of every preceding byte
//! ```
//!
//! Matrices are stored row-major except detector bases, which are
//! column-major (one basis vector after another).

use std::path::Path;

use ndarray::{Array1, Array2, ShapeBuilder};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detect::{Calibration, DetectorBank, NaiveDetector, SubspaceDetector};
use crate::error::{Error, Result};
use crate::eval::SplitSpec;
use crate::features::{FeatureLayout, NgramVocabulary, Standardizer};
use crate::mlp::{MlpModel, TrainConfig};
use crate::trace::DramGeometry;

const MAGIC: &[u8; 8] = b"ACORNBDL";
pub const BUNDLE_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Everything needed to go from a raw trace to a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub layout: FeatureLayout,
    pub subseq_len: usize,
    pub split: SplitSpec,
    pub train_config: TrainConfig,
    pub standardizer: Standardizer,
    pub model: MlpModel,
    pub detectors: Option<DetectorBank>,
    pub naive: Option<NaiveDetector>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset in f64 elements from the start of the array section.
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectorEntry {
    rank: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    crate_version: String,
    layout_hash: String,
    subseq_len: usize,
    geometry: DramGeometry,
    vocab: serde_json::Value,
    split: SplitSpec,
    train_config: TrainConfig,
    standardize: bool,
    labels: Vec<String>,
    energy: Option<f64>,
    alpha_grid: Option<Vec<f64>>,
    detectors: Option<Vec<DetectorEntry>>,
    naive: bool,
    arrays: Vec<ArrayEntry>,
}

#[derive(Default)]
struct ArrayWriter {
    entries: Vec<ArrayEntry>,
    data: Vec<f64>,
}

impl ArrayWriter {
    fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, values: impl IntoIterator<Item = f64>) {
        let offset = self.data.len();
        self.data.extend(values);
        debug_assert_eq!(self.data.len() - offset, shape.iter().product::<usize>());
        self.entries.push(ArrayEntry {
            name: name.into(),
            shape,
            offset,
        });
    }

    fn push_detector(&mut self, prefix: &str, d: &SubspaceDetector) {
        // column-major: iterate the transpose in logical order
        self.push(format!("{prefix}.basis"), vec![d.dim(), d.rank()], d.basis.t().iter().copied());
        self.push(format!("{prefix}.spectrum"), vec![d.spectrum.len()], d.spectrum.iter().copied());
        let cal = d.calibration.unwrap_or(Calibration { mean: f64::NAN, std: f64::NAN });
        self.push(format!("{prefix}.calibration"), vec![2], [cal.mean, cal.std]);
    }
}

struct ArrayReader<'a> {
    entries: &'a [ArrayEntry],
    data: &'a [f64],
}

impl ArrayReader<'_> {
    fn get(&self, name: &str) -> Result<(&[usize], &[f64])> {
        let e = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::CorruptBundle(format!("missing array {name}")))?;
        let len: usize = e.shape.iter().product();
        let values = self
            .data
            .get(e.offset..e.offset + len)
            .ok_or_else(|| Error::CorruptBundle(format!("array {name} out of bounds")))?;
        Ok((&e.shape, values))
    }

    fn vector(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.get(name)?.1.to_vec())
    }

    fn matrix(&self, name: &str, column_major: bool) -> Result<Array2<f64>> {
        let (shape, values) = self.get(name)?;
        let &[rows, cols] = shape else {
            return Err(Error::CorruptBundle(format!("array {name} is not 2-D")));
        };
        let shape = if column_major { (rows, cols).f() } else { (rows, cols).into_shape_with_order() };
        Array2::from_shape_vec(shape, values.to_vec())
            .map(|a| a.as_standard_layout().into_owned())
            .map_err(|e| Error::CorruptBundle(format!("array {name}: {e}")))
    }

    fn detector(&self, prefix: &str) -> Result<SubspaceDetector> {
        let basis = self.matrix(&format!("{prefix}.basis"), true)?;
        let spectrum = self.vector(&format!("{prefix}.spectrum"))?;
        let cal = self.vector(&format!("{prefix}.calibration"))?;
        let calibration = match cal[..] {
            [mean, std] if mean.is_nan() && std.is_nan() => None,
            [mean, std] => Some(Calibration { mean, std }),
            _ => return Err(Error::CorruptBundle(format!("{prefix}.calibration has wrong length"))),
        };
        Ok(SubspaceDetector {
            basis,
            spectrum,
            calibration,
        })
    }
}

impl Bundle {
    pub fn layout_hash(&self) -> String {
        self.layout.hash()
    }

    pub fn labels(&self) -> &[String] {
        &self.model.labels
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut arrays = ArrayWriter::default();
        let s = &self.standardizer;
        arrays.push("standardizer.mean", vec![s.mean.len()], s.mean.iter().copied());
        arrays.push("standardizer.std", vec![s.std.len()], s.std.iter().copied());
        let m = &self.model;
        arrays.push("mlp.w1", m.w1.shape().to_vec(), m.w1.iter().copied());
        arrays.push("mlp.b1", m.b1.shape().to_vec(), m.b1.iter().copied());
        arrays.push("mlp.w2", m.w2.shape().to_vec(), m.w2.iter().copied());
        arrays.push("mlp.b2", m.b2.shape().to_vec(), m.b2.iter().copied());
        if let Some(bank) = &self.detectors {
            for (w, d) in bank.detectors.iter().enumerate() {
                arrays.push_detector(&format!("detector.{w}"), d);
            }
        }
        if let Some(naive) = &self.naive {
            arrays.push_detector("naive", &naive.inner);
        }

        let manifest = Manifest {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            layout_hash: self.layout_hash(),
            subseq_len: self.subseq_len,
            geometry: self.layout.geometry,
            vocab: serde_json::from_str(&self.layout.vocab.to_json())?,
            split: self.split.clone(),
            train_config: self.train_config.clone(),
            standardize: self.standardizer.enabled,
            labels: self.model.labels.clone(),
            energy: self.detectors.as_ref().map(|b| b.energy),
            alpha_grid: self.detectors.as_ref().map(|b| b.alpha_grid.clone()),
            detectors: self.detectors.as_ref().map(|b| {
                b.detectors
                    .iter()
                    .map(|d| DetectorEntry { rank: d.rank() })
                    .collect()
            }),
            naive: self.naive.is_some(),
            arrays: arrays.entries,
        };
        let manifest = serde_json::to_vec(&manifest)?;

        let mut out = Vec::with_capacity(16 + manifest.len() + arrays.data.len() * 8 + CHECKSUM_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&BUNDLE_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        for v in &arrays.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |what: &str| Error::CorruptBundle(what.to_string());
        if bytes.len() < 16 + CHECKSUM_LEN {
            return Err(corrupt("file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != BUNDLE_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: BUNDLE_VERSION,
            });
        }
        let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != checksum {
            return Err(corrupt("checksum mismatch"));
        }
        let manifest_len = u32::from_le_bytes(body[12..16].try_into().expect("4 bytes")) as usize;
        let manifest_bytes = body.get(16..16 + manifest_len).ok_or_else(|| corrupt("truncated manifest"))?;
        let manifest: Manifest =
            serde_json::from_slice(manifest_bytes).map_err(|e| corrupt(&format!("manifest: {e}")))?;
        let raw = &body[16 + manifest_len..];
        if raw.len() % 8 != 0 {
            return Err(corrupt("array section is not a whole number of f64 values"));
        }
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let arrays = ArrayReader {
            entries: &manifest.arrays,
            data: &data,
        };

        let vocab = NgramVocabulary::from_json(&manifest.vocab.to_string())?;
        let layout = FeatureLayout::new(vocab, manifest.geometry);
        let hash = layout.hash();
        if hash != manifest.layout_hash {
            return Err(Error::LayoutMismatch {
                expected: manifest.layout_hash,
                got: hash,
            });
        }

        let standardizer = Standardizer {
            enabled: manifest.standardize,
            mean: arrays.vector("standardizer.mean")?,
            std: arrays.vector("standardizer.std")?,
        };
        let model = MlpModel {
            w1: arrays.matrix("mlp.w1", false)?,
            b1: Array1::from(arrays.vector("mlp.b1")?),
            w2: arrays.matrix("mlp.w2", false)?,
            b2: Array1::from(arrays.vector("mlp.b2")?),
            labels: manifest.labels,
        };
        let detectors = match manifest.detectors {
            None => None,
            Some(entries) => Some(DetectorBank {
                detectors: (0..entries.len())
                    .map(|w| arrays.detector(&format!("detector.{w}")))
                    .collect::<Result<_>>()?,
                energy: manifest.energy.ok_or_else(|| corrupt("missing energy"))?,
                alpha_grid: manifest.alpha_grid.ok_or_else(|| corrupt("missing alpha grid"))?,
            }),
        };
        let naive = if manifest.naive {
            Some(NaiveDetector {
                inner: arrays.detector("naive")?,
            })
        } else {
            None
        };
        let bundle = Self {
            layout,
            subseq_len: manifest.subseq_len,
            split: manifest.split,
            train_config: manifest.train_config,
            standardizer,
            model,
            detectors,
            naive,
        };
        bundle.check_shapes()?;
        Ok(bundle)
    }

    /// Every component agrees on the feature width and class count.
    pub fn check_shapes(&self) -> Result<()> {
        let f = self.layout.dim();
        let classes = self.model.labels.len();
        let mut ok = self.standardizer.dim() == f
            && self.standardizer.std.len() == f
            && self.model.inputs() == f
            && self.model.classes() == classes
            && self.model.b1.len() == self.model.hidden()
            && self.model.w2.nrows() == self.model.hidden()
            && self.model.b2.len() == classes;
        if let Some(bank) = &self.detectors {
            ok &= bank.n_classes() == classes && bank.detectors.iter().all(|d| d.dim() == f);
        }
        if let Some(naive) = &self.naive {
            ok &= naive.inner.dim() == f;
        }
        if ok {
            Ok(())
        } else {
            Err(Error::CorruptBundle(format!(
                "component shapes disagree with feature width {f} and {classes} classes"
            )))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
