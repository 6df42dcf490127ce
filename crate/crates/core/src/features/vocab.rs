use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ngram::{for_each_window, NGram, MAX_N};
use crate::error::{Error, Result};
use crate::trace::Command;

pub const DEFAULT_N_VALUES: [usize; 3] = [7, 11, 15];
pub const DEFAULT_TOP_M: usize = 25;
const VOCAB_FORMAT: &str = "acorn-ngram-vocab";
const VOCAB_VERSION: u32 = 1;

/// Frequent n-gram sets, one per `n`, in the fixed order that defines the
/// CMD part of the feature layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramVocabulary {
    pub m: usize,
    pub n_values: Vec<usize>,
    grams: Vec<Vec<NGram>>,
    slots: Vec<HashMap<u64, usize>>,
}

impl NgramVocabulary {
    pub fn new(m: usize, n_values: Vec<usize>, grams: Vec<Vec<NGram>>) -> Result<Self> {
        if n_values.len() != grams.len() {
            return Err(Error::Config("one n-gram list per n is required".into()));
        }
        let mut slots = Vec::with_capacity(grams.len());
        for (&n, list) in n_values.iter().zip(&grams) {
            if !(1..=MAX_N).contains(&n) {
                return Err(Error::Config(format!("n = {n} outside 1..={MAX_N}")));
            }
            let mut map = HashMap::with_capacity(list.len());
            for (i, g) in list.iter().enumerate() {
                if g.n as usize != n {
                    return Err(Error::Config(format!("{g} listed under n = {n}")));
                }
                if map.insert(g.key, i).is_some() {
                    return Err(Error::Config(format!("duplicate n-gram {g}")));
                }
            }
            slots.push(map);
        }
        Ok(Self {
            m,
            n_values,
            grams,
            slots,
        })
    }

    /// A vocabulary with no n-grams; features are then address-only.
    pub fn empty(n_values: Vec<usize>) -> Self {
        let grams = vec![Vec::new(); n_values.len()];
        Self::new(0, n_values, grams).expect("empty vocabulary is valid")
    }

    pub fn grams(&self, i: usize) -> &[NGram] {
        &self.grams[i]
    }

    /// `|A_n|` for each `n`, in layout order.
    pub fn sizes(&self) -> Vec<usize> {
        self.grams.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.grams.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Occurrence counts of every vocabulary n-gram, `c_7 ‖ c_11 ‖ c_15`.
    /// N-grams outside the vocabulary are ignored.
    pub fn cmd_vector(&self, cmds: &[Command]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.cmd_vector_into(cmds, &mut out);
        out
    }

    pub fn cmd_vector_into(&self, cmds: &[Command], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let mut offset = 0;
        for ((&n, slots), grams) in self.n_values.iter().zip(&self.slots).zip(&self.grams) {
            if !slots.is_empty() {
                let block = &mut out[offset..offset + grams.len()];
                for_each_window(cmds.iter().copied(), n, |key| {
                    if let Some(&j) = slots.get(&key) {
                        block[j] += 1.0;
                    }
                });
            }
            offset += grams.len();
        }
    }

    fn to_file(&self) -> VocabFile {
        VocabFile {
            format: VOCAB_FORMAT.into(),
            version: VOCAB_VERSION,
            m: self.m,
            n_values: self.n_values.clone(),
            grams: self
                .grams
                .iter()
                .map(|list| list.iter().map(ToString::to_string).collect())
                .collect(),
        }
    }

    /// Canonical JSON text; also the input to the layout hash.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VocabFile = serde_json::from_str(text)?;
        if file.format != VOCAB_FORMAT {
            return Err(Error::Config(format!("not a vocabulary file: `{}`", file.format)));
        }
        if file.version != VOCAB_VERSION {
            return Err(Error::VersionMismatch {
                found: file.version,
                expected: VOCAB_VERSION,
            });
        }
        let grams = file
            .grams
            .iter()
            .map(|list| {
                list.iter()
                    .map(|text| {
                        let cmds = text
                            .split_whitespace()
                            .map(str::parse)
                            .collect::<std::result::Result<Vec<Command>, _>>()
                            .map_err(Error::Config)?;
                        if cmds.is_empty() || cmds.len() > MAX_N {
                            return Err(Error::Config(format!("bad n-gram `{text}`")));
                        }
                        Ok(NGram::from_commands(&cmds))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.m, file.n_values, grams)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VocabFile {
    format: String,
    version: u32,
    m: usize,
    n_values: Vec<usize>,
    grams: Vec<Vec<String>>,
}

/// The `m` most frequent keys, ties broken by ascending key (lexicographic
/// on command codes).
fn top_m(counts: HashMap<u64, u64>, m: usize) -> Vec<u64> {
    let mut ranked: Vec<(u64, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(m).map(|(key, _)| key).collect()
}

/// Builds the vocabulary from training command lines grouped by class.
///
/// Counts are pooled over all training lines of a class, the top `m` per
/// class and `n` are kept, and `A_n` is their union ordered by first
/// contributing class, then rank within that class.
pub fn build_vocab<S: AsRef<[Command]>>(
    classes: &[(String, Vec<S>)],
    n_values: &[usize],
    m: usize,
) -> Result<NgramVocabulary> {
    if let Some((label, _)) = classes.iter().find(|(_, lines)| lines.is_empty()) {
        return Err(Error::EmptyClass(label.clone()));
    }
    let mut grams = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if !(1..=MAX_N).contains(&n) {
            return Err(Error::Config(format!("n = {n} outside 1..={MAX_N}")));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (_, lines) in classes {
            let mut counts: HashMap<u64, u64> = HashMap::new();
            for line in lines {
                for_each_window(line.as_ref().iter().copied(), n, |key| {
                    *counts.entry(key).or_insert(0) += 1
                });
            }
            for key in top_m(counts, m) {
                if seen.insert(key) {
                    list.push(NGram { n: n as u8, key });
                }
            }
        }
        grams.push(list);
    }
    NgramVocabulary::new(m, n_values.to_vec(), grams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Command::*;

    fn repeat(motif: &[Command], len: usize) -> Vec<Command> {
        motif.iter().copied().cycle().take(len).collect()
    }

    #[test]
    fn single_class_rotation_example() {
        // 10 commands of ACT WRA PRE: windows of 3 are
        // (ACT,WRA,PRE) x3, (WRA,PRE,ACT) x3, (PRE,ACT,WRA) x2
        let line = repeat(&[Act, Wra, Pre], 10);
        let vocab = build_vocab(&[("a".into(), vec![line.clone()])], &[3], 2).unwrap();
        assert_eq!(
            vocab.grams(0),
            &[
                NGram::from_commands(&[Act, Wra, Pre]),
                NGram::from_commands(&[Wra, Pre, Act]),
            ]
        );
        assert_eq!(vocab.cmd_vector(&line), vec![3.0, 3.0]);
    }

    #[test]
    fn ties_break_lexicographically() {
        // every rotation appears 3 times in a 11-long line... use 9+2 = 11 -> counts 3,3,3
        let line = repeat(&[Pre, Act, Rda], 11);
        let vocab = build_vocab(&[("a".into(), vec![line])], &[3], 2).unwrap();
        // codes: ACT=0 RDA=1 PRE=3 -> smallest keys are (ACT,RDA,PRE), (RDA,PRE,ACT)
        assert_eq!(
            vocab.grams(0),
            &[
                NGram::from_commands(&[Act, Rda, Pre]),
                NGram::from_commands(&[Rda, Pre, Act]),
            ]
        );
    }

    #[test]
    fn union_sizes() {
        let a = repeat(&[Act, Rda, Pre], 300);
        let b = repeat(&[Act, Wra, Wra, Prea], 300);
        let disjoint =
            build_vocab(&[("a".into(), vec![a.clone()]), ("b".into(), vec![b])], &[3], 2).unwrap();
        assert_eq!(disjoint.sizes(), vec![4]);
        let same =
            build_vocab(&[("a".into(), vec![a.clone()]), ("c".into(), vec![a])], &[3], 2).unwrap();
        assert_eq!(same.sizes(), vec![2]);
    }

    #[test]
    fn pools_over_class_lines_and_orders_by_class() {
        let a1 = repeat(&[Act, Rda, Pre], 30);
        let a2 = repeat(&[Act, Wra, Pre], 90);
        let b = repeat(&[Act, Rda, Pre], 60);
        let vocab = build_vocab(
            &[("a".into(), vec![a1, a2]), ("b".into(), vec![b])],
            &[3],
            1,
        )
        .unwrap();
        // class a pooled: ACT WRA PRE dominates; class b adds ACT RDA PRE
        assert_eq!(
            vocab.grams(0),
            &[
                NGram::from_commands(&[Act, Wra, Pre]),
                NGram::from_commands(&[Act, Rda, Pre]),
            ]
        );
    }

    #[test]
    fn empty_class_is_an_error() {
        let classes: Vec<(String, Vec<Vec<Command>>)> =
            vec![("a".into(), vec![vec![Act]]), ("b".into(), vec![])];
        assert!(matches!(
            build_vocab(&classes, &[1], 1),
            Err(Error::EmptyClass(label)) if label == "b"
        ));
    }

    #[test]
    fn vector_ignores_unseen_ngrams() {
        let vocab = build_vocab(&[("a".into(), vec![repeat(&[Act, Rda, Pre], 30)])], &[3], 3)
            .unwrap();
        assert_eq!(vocab.cmd_vector(&repeat(&[Act, Wra, Prea], 50)), vec![0.0; 3]);
    }

    #[test]
    fn json_roundtrip() {
        let vocab = build_vocab(
            &[("a".into(), vec![repeat(&[Act, Rda, Rda, Pre, Prea], 400)])],
            &[7, 11, 15],
            4,
        )
        .unwrap();
        let back = NgramVocabulary::from_json(&vocab.to_json()).unwrap();
        assert_eq!(back, vocab);
        let bumped = vocab.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            NgramVocabulary::from_json(&bumped),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
    }
}
