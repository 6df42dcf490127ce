//! End-to-end glue: traces to subsequences to features to a fitted bundle.

use std::path::{Path, PathBuf};

use crate::bundle::Bundle;
use crate::detect::{split_by_class, DetectorBank, NaiveDetector, DEFAULT_ALPHA_GRID, DEFAULT_ENERGY};
use crate::error::{Error, Result};
use crate::eval::{split, Split, SplitSpec, DEFAULT_TRAIN_FRACTION};
use crate::features::{
    build_vocab, FeatureLayout, FeatureSet, NgramVocabulary, Standardizer, DEFAULT_N_VALUES, DEFAULT_TOP_M,
};
use crate::mlp::{train, TrainConfig};
use crate::synth::{Catalog, Role};
use crate::trace::{partition, read_trace_file, DramGeometry, Subsequence, WorkloadSequence};

pub const DEFAULT_SUBSEQ_LEN: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub geometry: DramGeometry,
    pub subseq_len: usize,
    pub n_values: Vec<usize>,
    pub top_m: usize,
    pub standardize: bool,
    pub energy: f64,
    pub alpha_grid: Vec<f64>,
    pub train_fraction: f64,
    /// Seeds the split; the classifier seed lives in `train`.
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            geometry: DramGeometry::default(),
            subseq_len: DEFAULT_SUBSEQ_LEN,
            n_values: DEFAULT_N_VALUES.to_vec(),
            top_m: DEFAULT_TOP_M,
            standardize: true,
            energy: DEFAULT_ENERGY,
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn split_spec(&self, known: Vec<String>, unknown: Vec<String>) -> SplitSpec {
        SplitSpec::new(known, unknown, self.train_fraction, self.seed)
    }
}

/// Known and unknown workload names of a catalog, in catalog order.
pub fn roles(catalog: &Catalog) -> (Vec<String>, Vec<String>) {
    (catalog.names_with_role(Role::Known), catalog.names_with_role(Role::Unknown))
}

/// Trace files in `dir` (`.csv` or `.csv.gz`), sorted by name.
pub fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csv") || name.ends_with(".csv.gz")
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_traces(paths: &[PathBuf], geometry: &DramGeometry) -> Result<Vec<WorkloadSequence>> {
    paths.iter().map(|p| read_trace_file(p, geometry)).collect()
}

pub fn subsequences(seqs: &[WorkloadSequence], subseq_len: usize) -> Vec<Subsequence> {
    seqs.iter().flat_map(|s| partition(s, subseq_len)).collect()
}

pub fn split_subsequences(subseqs: &[Subsequence], spec: &SplitSpec) -> Result<Split> {
    let labels: Vec<String> = subseqs.iter().map(|s| s.label.clone()).collect();
    let blocks: Vec<usize> = subseqs.iter().map(|s| s.source_block).collect();
    split(&labels, &blocks, spec)
}

/// Vocabulary from the training subsequences of the known classes only.
pub fn training_vocab(subseqs: &[Subsequence], spec: &SplitSpec, cfg: &PipelineConfig) -> Result<NgramVocabulary> {
    let split = split_subsequences(subseqs, spec)?;
    let classes: Vec<(String, Vec<Vec<crate::trace::Command>>)> = spec
        .known
        .iter()
        .map(|class| {
            let lines = split
                .train
                .iter()
                .filter(|&&i| &subseqs[i].label == class)
                .map(|&i| subseqs[i].commands().collect())
                .collect();
            (class.clone(), lines)
        })
        .collect();
    build_vocab(&classes, &cfg.n_values, cfg.top_m)
}

pub fn featurize_set(layout: &FeatureLayout, subseqs: &[Subsequence]) -> FeatureSet {
    let (data, _) = layout.featurize_all(subseqs);
    FeatureSet {
        layout_hash: layout.hash(),
        labels: subseqs.iter().map(|s| s.label.clone()).collect(),
        blocks: subseqs.iter().map(|s| s.source_block).collect(),
        data,
    }
}

fn training_rows(set: &FeatureSet, spec: &SplitSpec) -> Result<(ndarray::Array2<f64>, Vec<usize>)> {
    let split = split(&set.labels, &set.blocks, spec)?;
    let labels = split
        .train
        .iter()
        .map(|&i| spec.class_index(&set.labels[i]).expect("train rows are known"))
        .collect();
    Ok((set.data.select(ndarray::Axis(0), &split.train), labels))
}

/// Fits the standardizer and the classifier; detectors are left empty.
pub fn train_classifier(
    set: &FeatureSet,
    layout: &FeatureLayout,
    spec: &SplitSpec,
    cfg: &PipelineConfig,
) -> Result<Bundle> {
    set.check_layout(&layout.hash())?;
    if set.dim() != layout.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} features", layout.dim()),
            got: format!("{} features", set.dim()),
        });
    }
    let (raw, labels) = training_rows(set, spec)?;
    let standardizer = if cfg.standardize {
        Standardizer::fit(&raw)?
    } else {
        Standardizer::disabled(raw.ncols())
    };
    let x = standardizer.apply_rows(&raw);
    let outcome = train(&x, &labels, spec.known.clone(), &cfg.train)?;
    Ok(Bundle {
        layout: layout.clone(),
        subseq_len: cfg.subseq_len,
        split: spec.clone(),
        train_config: cfg.train.clone(),
        standardizer,
        model: outcome.model,
        detectors: None,
        naive: None,
    })
}

/// Fits and calibrates the per-class and pooled detectors on the bundle's
/// standardized training rows.
pub fn fit_detectors(bundle: &mut Bundle, set: &FeatureSet, energy: f64, alpha_grid: &[f64]) -> Result<()> {
    set.check_layout(&bundle.layout_hash())?;
    let (raw, labels) = training_rows(set, &bundle.split)?;
    let x = bundle.standardizer.apply_rows(&raw);
    let per_class = split_by_class(&x, &labels, bundle.split.known.len())?;
    let mut bank = DetectorBank::fit(&per_class, energy)?;
    bank.alpha_grid = alpha_grid.to_vec();
    bundle.detectors = Some(bank);
    bundle.naive = Some(NaiveDetector::fit(&x, energy)?);
    Ok(())
}

/// Everything a benchmark run produces.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub bundle: Bundle,
    pub features: FeatureSet,
}

/// Vocabulary, features, classifier and detectors from in-memory traces.
pub fn fit_all(seqs: &[WorkloadSequence], spec: &SplitSpec, cfg: &PipelineConfig) -> Result<Fitted> {
    let subseqs = subsequences(seqs, cfg.subseq_len);
    let vocab = training_vocab(&subseqs, spec, cfg)?;
    let layout = FeatureLayout::new(vocab, cfg.geometry);
    let features = featurize_set(&layout, &subseqs);
    let mut bundle = train_classifier(&features, &layout, spec, cfg)?;
    fit_detectors(&mut bundle, &features, cfg.energy, &cfg.alpha_grid)?;
    Ok(Fitted { bundle, features })
}

/// Generates every workload of `catalog` at `length` records, in parallel.
pub fn generate_catalog(catalog: &Catalog, length: usize, geometry: &DramGeometry) -> Result<Vec<WorkloadSequence>> {
    use rayon::prelude::*;
    let workloads: Vec<_> = catalog.workloads().collect();
    workloads.par_iter().map(|w| w.generate(length, geometry)).collect()
}

/// Decisions for each complete subsequence of a raw trace.
pub fn predict_trace(bundle: &Bundle, seq: &WorkloadSequence, alpha: f64) -> Result<Vec<crate::detect::Decision>> {
    let subseqs = partition(seq, bundle.subseq_len);
    if subseqs.is_empty() {
        return Err(Error::NoCompleteSubsequence {
            len: seq.len(),
            subseq_len: bundle.subseq_len,
        });
    }
    let bank = bundle
        .detectors
        .as_ref()
        .ok_or_else(|| Error::Config("bundle has no fitted detectors".into()))?;
    subseqs
        .iter()
        .map(|s| {
            let x = bundle.standardizer.apply(ndarray::ArrayView1::from(&bundle.layout.featurize(s)));
            let (w, _) = bundle.model.predict(x.view())?;
            bank.decide(x.view(), w, alpha)
        })
        .collect()
}
