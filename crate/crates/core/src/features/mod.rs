//! Subsequence to feature vector transformation.
//!
//! A feature vector is laid out as
//! `[c_7 ‖ c_11 ‖ c_15 ‖ b ‖ d]`: vocabulary n-gram counts over the command
//! column, per-bank access counts over every record, and per-block cell
//! access counts (reads and writes resolved through the active row) summed
//! over banks.

mod address;
mod io;
mod ngram;
mod standardize;
mod vocab;

use ndarray::Array2;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use address::{address_vector, bank_vector, AddressCounts};
pub use io::FeatureSet;
pub use ngram::{count_ngrams, for_each_window, NGram, MAX_N};
pub use standardize::Standardizer;
pub use vocab::{build_vocab, NgramVocabulary, DEFAULT_N_VALUES, DEFAULT_TOP_M};

use crate::trace::{Command, DramGeometry, Subsequence, TraceRecord};

/// Vocabulary plus geometry: everything that fixes the feature layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayout {
    pub vocab: NgramVocabulary,
    pub geometry: DramGeometry,
}

impl FeatureLayout {
    pub fn new(vocab: NgramVocabulary, geometry: DramGeometry) -> Self {
        Self { vocab, geometry }
    }

    pub fn cmd_len(&self) -> usize {
        self.vocab.len()
    }

    /// Total length `F`.
    pub fn dim(&self) -> usize {
        self.vocab.len() + self.geometry.bank_count() + self.geometry.block_count()
    }

    /// Start offsets of the bank and block sections.
    pub fn offsets(&self) -> (usize, usize) {
        let bank = self.vocab.len();
        (bank, bank + self.geometry.bank_count())
    }

    /// Hex SHA-256 over the canonical vocabulary JSON and the geometry.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.vocab.to_json().as_bytes());
        hasher.update(
            serde_json::to_string(&self.geometry)
                .expect("geometry serializes")
                .as_bytes(),
        );
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Feature vector of one subsequence, plus its orphan access count.
    pub fn featurize_records(&self, records: &[TraceRecord]) -> (Vec<f64>, usize) {
        let mut out = vec![0.0; self.dim()];
        let (bank_at, block_at) = self.offsets();
        let cmds: Vec<Command> = records.iter().map(|r| r.cmd).collect();
        self.vocab.cmd_vector_into(&cmds, &mut out[..bank_at]);
        for r in records {
            out[bank_at + r.bank_index(&self.geometry)] += 1.0;
        }
        let orphans = address::accumulate_blocks(records, &self.geometry, &mut out[block_at..]);
        (out, orphans)
    }

    pub fn featurize(&self, subseq: &Subsequence) -> Vec<f64> {
        self.featurize_records(&subseq.records).0
    }

    /// Featurizes many subsequences in parallel; row order follows input order.
    pub fn featurize_all(&self, subseqs: &[Subsequence]) -> (Array2<f64>, usize) {
        let rows: Vec<(Vec<f64>, usize)> = subseqs
            .par_iter()
            .map(|s| self.featurize_records(&s.records))
            .collect();
        let orphans = rows.iter().map(|(_, o)| o).sum();
        let mut data = Array2::zeros((rows.len(), self.dim()));
        for (mut dst, (row, _)) in data.rows_mut().into_iter().zip(rows) {
            dst.assign(&ndarray::ArrayView1::from(&row));
        }
        (data, orphans)
    }
}

/// Free-function form of [`FeatureLayout::featurize`].
pub fn featurize(subseq: &Subsequence, vocab: &NgramVocabulary, geometry: &DramGeometry) -> Vec<f64> {
    FeatureLayout::new(vocab.clone(), *geometry).featurize(subseq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{affinity_over, generate_workload, SpatialMode, WorkloadProfile};
    use crate::trace::{partition, WorkloadSequence};

    fn sized_vocab(sizes: [usize; 3]) -> NgramVocabulary {
        // distinct n-grams: count up in base 5 over the first commands
        let grams = DEFAULT_N_VALUES
            .iter()
            .zip(sizes)
            .map(|(&n, size)| {
                (0..size)
                    .map(|i| {
                        let mut cmds = vec![Command::Act; n];
                        let mut v = i;
                        for slot in cmds.iter_mut().rev() {
                            *slot = Command::from_code((v % 5) as u8).unwrap();
                            v /= 5;
                        }
                        NGram::from_commands(&cmds)
                    })
                    .collect()
            })
            .collect();
        NgramVocabulary::new(25, DEFAULT_N_VALUES.to_vec(), grams).unwrap()
    }

    #[test]
    fn layout_lengths() {
        let g = DramGeometry::default();
        let sec = FeatureLayout::new(sized_vocab([154, 236, 289]), g);
        assert_eq!(sec.cmd_len(), 679);
        assert_eq!(sec.dim(), 1735);
        let memtest = FeatureLayout::new(sized_vocab([132, 196, 215]), g);
        assert_eq!(memtest.cmd_len(), 543);
        assert_eq!(memtest.dim(), 1599);
        let empty = FeatureLayout::new(NgramVocabulary::empty(DEFAULT_N_VALUES.to_vec()), g);
        assert_eq!(empty.dim(), 1056);
        assert_ne!(sec.hash(), memtest.hash());
        assert_eq!(sec.hash(), FeatureLayout::new(sized_vocab([154, 236, 289]), g).hash());
    }

    #[test]
    fn spatial_mode_only_changes_address_section() {
        let g = DramGeometry::default();
        let base = WorkloadProfile {
            name: "p".into(),
            motif: "ACT RDA*3 WRA PRE".parse().unwrap(),
            motif_noise: 0.0,
            spatial: SpatialMode::SequentialSweep {
                start_row: 0,
                span_rows: 64,
            },
            bank_affinity: affinity_over(&[1, 2, 9], &g),
            seed: 3,
        };
        let hot = WorkloadProfile {
            spatial: SpatialMode::HotBlock {
                blocks: vec![500, 900],
                heat: 1.0,
            },
            ..base.clone()
        };
        let a = generate_workload(&base, 4000, &g).unwrap();
        let b = generate_workload(&hot, 4000, &g).unwrap();
        let lines: Vec<Vec<Command>> = vec![a.records.iter().map(|r| r.cmd).collect()];
        let vocab = build_vocab(&[("p".into(), lines)], &DEFAULT_N_VALUES, 5).unwrap();
        let layout = FeatureLayout::new(vocab, g);
        let fa = layout.featurize(&partition(&a, 4000)[0]);
        let fb = layout.featurize(&partition(&b, 4000)[0]);
        let (bank_at, block_at) = layout.offsets();
        assert_eq!(fa[..bank_at], fb[..bank_at]);
        assert!(fa[..bank_at].iter().any(|&c| c > 0.0));
        assert_eq!(fa[bank_at..block_at], fb[bank_at..block_at]);
        assert_ne!(fa[block_at..], fb[block_at..]);
    }

    #[test]
    fn featurize_matches_parts() {
        let g = DramGeometry::default();
        let profile = WorkloadProfile {
            name: "q".into(),
            motif: "ACT RDA*2 PRE ACT WRA PREA".parse().unwrap(),
            motif_noise: 0.3,
            spatial: SpatialMode::UniformRandom,
            bank_affinity: vec![1.0; 32],
            seed: 5,
        };
        let seq = generate_workload(&profile, 3000, &g).unwrap();
        // drop the leading ACT so the first accesses are orphans
        let seq = WorkloadSequence::new("q", seq.records[1..].to_vec());
        let sub = &partition(&seq, 2500)[0];
        let cmds: Vec<Command> = sub.commands().collect();
        let vocab = build_vocab(&[("q".into(), vec![cmds.clone()])], &[2, 3], 4).unwrap();
        let layout = FeatureLayout::new(vocab.clone(), g);
        let (x, orphans) = layout.featurize_records(&sub.records);
        let (bank_at, block_at) = layout.offsets();
        assert_eq!(x[..bank_at], vocab.cmd_vector(&cmds)[..]);
        assert_eq!(x[bank_at..block_at], bank_vector(&sub.records, &g)[..]);
        let addr = address_vector(&sub.records, &g);
        assert_eq!(x[block_at..], addr.blocks[..]);
        assert_eq!(orphans, addr.orphans);
        assert!(orphans >= 1);
        assert_eq!(x, featurize(sub, &vocab, &g));
    }
}
