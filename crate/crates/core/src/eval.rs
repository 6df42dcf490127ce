//! Train/test splitting, open-set scoring and metrics.

use std::fmt::Write as _;
use std::time::Instant;

use ndarray::Axis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::Bundle;
use crate::detect::{recon_error, Decision, DEFAULT_ALPHA_GRID};
use crate::error::{Error, Result};
use crate::features::FeatureSet;

pub const DEFAULT_TRAIN_FRACTION: f64 = 2.0 / 3.0;

pub const REPORT_HEADER: &str =
    "alpha,known_acc,unk_recall,unk_precision,unk_f1,n_known_test,n_unknown_test,inference_seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub known: Vec<String>,
    pub unknown: Vec<String>,
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(known: Vec<String>, unknown: Vec<String>, train_fraction: f64, seed: u64) -> Self {
        Self {
            known,
            unknown,
            train_fraction,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut overlap: Vec<String> = self
            .known
            .iter()
            .filter(|k| self.unknown.contains(k))
            .cloned()
            .collect();
        if !overlap.is_empty() {
            overlap.sort();
            overlap.dedup();
            return Err(Error::LabelOverlap(overlap));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        if self.known.is_empty() {
            return Err(Error::Config("no known workloads".into()));
        }
        Ok(())
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.known.iter().position(|k| k == label)
    }
}

/// Row indices of each partition, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test_known: Vec<usize>,
    pub test_unknown: Vec<usize>,
}

impl Split {
    pub fn test(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.test_known.iter().chain(&self.test_unknown).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Splits rows identified by `(labels[i], blocks[i])`.
///
/// Each known class is shuffled in block order with one seeded stream and
/// `round(fraction * n)` rows (at least one, at most `n - 1`) go to training.
/// Every row of an unknown workload is a test row; rows of unlisted
/// workloads are ignored.
pub fn split(labels: &[String], blocks: &[usize], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test_known = Vec::new();
    for class in &spec.known {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| &labels[i] == class).collect();
        if rows.len() < 2 {
            return Err(Error::EmptyClass(format!(
                "{class} has {} subsequences, need at least 2",
                rows.len()
            )));
        }
        rows.sort_by_key(|&i| (blocks[i], i));
        for i in (1..rows.len()).rev() {
            let j = rng.gen_range(0..=i as u32) as usize;
            rows.swap(i, j);
        }
        let n = rows.len();
        let k = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&rows[..k]);
        test_known.extend_from_slice(&rows[k..]);
    }
    let test_unknown: Vec<usize> = (0..labels.len())
        .filter(|&i| spec.unknown.contains(&labels[i]))
        .collect();
    train.sort_unstable();
    test_known.sort_unstable();
    Ok(Split {
        train,
        test_known,
        test_unknown,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truth {
    Known(usize),
    Unknown,
}

/// Everything about one test sample that the decision rules need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub row: usize,
    pub truth: Truth,
    pub predicted: usize,
    pub max_prob: f64,
    /// Reconstruction error under the predicted class's basis.
    pub class_error: f64,
    /// Reconstruction error under the pooled basis, if one was fitted.
    pub naive_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Per-class subspaces; parameter is alpha.
    PerClass,
    /// Pooled subspace; parameter is alpha.
    NaiveSvd,
    /// Max-softmax threshold; parameter is the threshold.
    Softmax,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PerClass => "per_class",
            Method::NaiveSvd => "naive_svd",
            Method::Softmax => "softmax",
        }
    }
}

fn truth_of(spec: &SplitSpec, label: &str) -> Option<Truth> {
    match spec.class_index(label) {
        Some(w) => Some(Truth::Known(w)),
        None if spec.unknown.iter().any(|u| u == label) => Some(Truth::Unknown),
        None => None,
    }
}

/// Standardizes, classifies and measures reconstruction errors for the
/// given rows, in parallel, preserving row order.
pub fn score(bundle: &Bundle, set: &FeatureSet, rows: &[usize]) -> Result<Vec<Scored>> {
    set.check_layout(&bundle.layout_hash())?;
    let bank = bundle
        .detectors
        .as_ref()
        .ok_or_else(|| Error::Config("bundle has no fitted detectors".into()))?;
    if let Some(w) = bank.detectors.iter().position(|d| d.calibration.is_none()) {
        return Err(Error::UncalibratedDetector(w));
    }
    rows.par_iter()
        .map(|&row| {
            let truth = truth_of(&bundle.split, &set.labels[row]).ok_or_else(|| {
                Error::Config(format!("row {row} has label {} outside the split", set.labels[row]))
            })?;
            let x = bundle.standardizer.apply(set.data.index_axis(Axis(0), row));
            let (predicted, probs) = bundle.model.predict(x.view())?;
            let max_prob = probs[predicted];
            let class_error = recon_error(&bank.detectors[predicted].basis, x.view())?;
            let naive_error = match &bundle.naive {
                Some(n) => Some(recon_error(&n.inner.basis, x.view())?),
                None => None,
            };
            Ok(Scored {
                row,
                truth,
                predicted,
                max_prob,
                class_error,
                naive_error,
            })
        })
        .collect()
}

/// Applies one decision rule to a scored sample. Matches
/// [`crate::detect::DetectorBank::decide`] and friends exactly.
pub fn decide(bundle: &Bundle, s: &Scored, method: Method, param: f64) -> Decision {
    match method {
        Method::PerClass => {
            let bank = bundle.detectors.as_ref().expect("scored bundles have detectors");
            let cal = bank.detectors[s.predicted].calibration.expect("calibrated");
            accept_below(s.class_error, cal.threshold(param), s.predicted)
        }
        Method::NaiveSvd => {
            let naive = bundle.naive.as_ref().expect("naive detector fitted");
            let cal = naive.inner.calibration.expect("calibrated");
            accept_below(s.naive_error.expect("naive error"), cal.threshold(param), s.predicted)
        }
        // same rule as naive_rejection on the full softmax vector
        Method::Softmax if s.max_prob < param => Decision::Unknown,
        Method::Softmax => Decision::Known(s.predicted),
    }
}

fn accept_below(error: f64, threshold: f64, class: usize) -> Decision {
    if error < threshold {
        Decision::Known(class)
    } else {
        Decision::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Percent of known test samples accepted with the right label.
    pub known_acc: Option<f64>,
    pub unk_recall: Option<f64>,
    pub unk_precision: Option<f64>,
    pub unk_f1: Option<f64>,
    pub n_known_test: usize,
    pub n_unknown_test: usize,
    pub known_correct: usize,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

/// Confusion counts; the last row and column stand for the unknown class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

pub fn metrics(outcomes: &[(Truth, Decision)]) -> Metrics {
    let mut m = Metrics {
        known_acc: None,
        unk_recall: None,
        unk_precision: None,
        unk_f1: None,
        n_known_test: 0,
        n_unknown_test: 0,
        known_correct: 0,
        true_positive: 0,
        false_positive: 0,
        false_negative: 0,
    };
    for &(truth, decision) in outcomes {
        match (truth, decision) {
            (Truth::Known(w), Decision::Known(p)) => {
                m.n_known_test += 1;
                m.known_correct += usize::from(w == p);
            }
            (Truth::Known(_), Decision::Unknown) => {
                m.n_known_test += 1;
                m.false_positive += 1;
            }
            (Truth::Unknown, Decision::Unknown) => {
                m.n_unknown_test += 1;
                m.true_positive += 1;
            }
            (Truth::Unknown, Decision::Known(_)) => {
                m.n_unknown_test += 1;
                m.false_negative += 1;
            }
        }
    }
    let pct = |a: usize, b: usize| 100.0 * a as f64 / b as f64;
    if m.n_known_test > 0 {
        m.known_acc = Some(pct(m.known_correct, m.n_known_test));
    }
    if m.n_unknown_test > 0 {
        let recall = pct(m.true_positive, m.n_unknown_test);
        let flagged = m.true_positive + m.false_positive;
        let precision = if flagged == 0 { 0.0 } else { pct(m.true_positive, flagged) };
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * recall * precision / (recall + precision)
        };
        m.unk_recall = Some(recall);
        m.unk_precision = Some(precision);
        m.unk_f1 = Some(f1);
    }
    m
}

pub fn confusion(labels: &[String], outcomes: &[(Truth, Decision)]) -> Confusion {
    let k = labels.len();
    let mut counts = vec![vec![0; k + 1]; k + 1];
    for &(truth, decision) in outcomes {
        let r = match truth {
            Truth::Known(w) => w,
            Truth::Unknown => k,
        };
        let c = match decision {
            Decision::Known(p) => p,
            Decision::Unknown => k,
        };
        counts[r][c] += 1;
    }
    let mut labels = labels.to_vec();
    labels.push("UNKNOWN".into());
    Confusion { labels, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSetReport {
    pub method: Method,
    pub alpha: f64,
    pub metrics: Metrics,
    pub confusion: Confusion,
    pub inference_seconds: f64,
}

fn outcomes(bundle: &Bundle, scored: &[Scored], method: Method, param: f64) -> Vec<(Truth, Decision)> {
    scored
        .iter()
        .map(|s| (s.truth, decide(bundle, s, method, param)))
        .collect()
}

pub fn report_for(bundle: &Bundle, scored: &[Scored], method: Method, param: f64, seconds: f64) -> OpenSetReport {
    let out = outcomes(bundle, scored, method, param);
    OpenSetReport {
        method,
        alpha: param,
        metrics: metrics(&out),
        confusion: confusion(bundle.labels(), &out),
        inference_seconds: seconds,
    }
}

/// Scores the test rows of `set` under the bundle's split and reports the
/// per-class detector at every alpha in `alphas`.
pub fn run_openset(bundle: &Bundle, set: &FeatureSet, alphas: &[f64]) -> Result<Evaluation> {
    let split = split(&set.labels, &set.blocks, &bundle.split)?;
    let start = Instant::now();
    let scored = score(bundle, set, &split.test())?;
    let scoring = start.elapsed().as_secs_f64();
    let reports = alphas
        .iter()
        .map(|&alpha| {
            let t = Instant::now();
            let mut r = report_for(bundle, &scored, Method::PerClass, alpha, 0.0);
            r.inference_seconds = scoring + t.elapsed().as_secs_f64();
            r
        })
        .collect();
    Ok(Evaluation { scored, reports })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub scored: Vec<Scored>,
    pub reports: Vec<OpenSetReport>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// CSV table, one row per report.
pub fn reports_csv(reports: &[OpenSetReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.alpha,
            opt(m.known_acc),
            opt(m.unk_recall),
            opt(m.unk_precision),
            opt(m.unk_f1),
            m.n_known_test,
            m.n_unknown_test,
            r.inference_seconds
        );
    }
    out
}

pub fn reports_json(reports: &[OpenSetReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

/// One operating point of a method's trade-off curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: Method,
    pub param: f64,
    pub known_acc: f64,
    pub unk_recall: f64,
    pub unk_precision: f64,
    pub unk_f1: f64,
}

fn point(method: Method, param: f64, m: &Metrics) -> CurvePoint {
    CurvePoint {
        method,
        param,
        known_acc: m.known_acc.unwrap_or(f64::NAN),
        unk_recall: m.unk_recall.unwrap_or(f64::NAN),
        unk_precision: m.unk_precision.unwrap_or(f64::NAN),
        unk_f1: m.unk_f1.unwrap_or(f64::NAN),
    }
}

/// Per-class detector curve over an explicit alpha list.
pub fn per_class_curve(bundle: &Bundle, scored: &[Scored], alphas: &[f64]) -> Vec<CurvePoint> {
    alphas
        .iter()
        .map(|&a| point(Method::PerClass, a, &metrics(&outcomes(bundle, scored, Method::PerClass, a))))
        .collect()
}

/// Every distinct operating point of a threshold rule "unknown iff
/// `value < threshold`" (softmax) or "known iff `value < threshold`"
/// (pooled subspace), plus the accept-all end.
fn exhaustive_curve(
    scored: &[Scored],
    method: Method,
    value: impl Fn(&Scored) -> f64,
    param_of: impl Fn(f64) -> f64,
) -> Vec<CurvePoint> {
    let mut cuts: Vec<f64> = scored.iter().map(&value).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let accept_all = match method {
        Method::Softmax => 0.0,
        _ => f64::INFINITY,
    };
    cuts.push(accept_all);
    cuts.iter()
        .map(|&cut| {
            let out: Vec<(Truth, Decision)> = scored
                .iter()
                .map(|s| {
                    let v = value(s);
                    let unknown = match method {
                        Method::Softmax => v < cut,
                        _ => v >= cut,
                    };
                    let d = if unknown { Decision::Unknown } else { Decision::Known(s.predicted) };
                    (s.truth, d)
                })
                .collect();
            point(method, param_of(cut), &metrics(&out))
        })
        .collect()
}

/// Max-softmax rejection at every distinct threshold.
pub fn softmax_curve(scored: &[Scored]) -> Vec<CurvePoint> {
    exhaustive_curve(scored, Method::Softmax, |s| s.max_prob, |t| t)
}

/// Pooled-subspace detector at every distinct threshold; the parameter is
/// the equivalent alpha.
pub fn naive_curve(bundle: &Bundle, scored: &[Scored]) -> Option<Vec<CurvePoint>> {
    let cal = bundle.naive.as_ref()?.inner.calibration?;
    Some(exhaustive_curve(
        scored,
        Method::NaiveSvd,
        |s| s.naive_error.unwrap_or(f64::INFINITY),
        |t| if cal.std > 0.0 { (t - cal.mean) / cal.std } else { f64::INFINITY },
    ))
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("method,param,known_acc,unk_recall,unk_precision,unk_f1\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.method.name(),
            p.param,
            p.known_acc,
            p.unk_recall,
            p.unk_precision,
            p.unk_f1
        );
    }
    out
}

/// Best unknown recall among points whose known accuracy is at least
/// `target - tolerance`.
pub fn best_recall_at_accuracy(points: &[CurvePoint], target: f64, tolerance: f64) -> Option<&CurvePoint> {
    points
        .iter()
        .filter(|p| p.known_acc >= target - tolerance)
        .max_by(|a, b| a.unk_recall.total_cmp(&b.unk_recall))
}

/// Per-sample log with the decision at every alpha.
pub fn decision_log_csv(bundle: &Bundle, set: &FeatureSet, scored: &[Scored], alphas: &[f64]) -> String {
    let mut out = String::from("row,label,block,truth,predicted,max_prob,class_error");
    for a in alphas {
        let _ = write!(out, ",decision_alpha_{a}");
    }
    out.push('\n');
    let name = |w: usize| bundle.labels()[w].as_str();
    for s in scored {
        let truth = match s.truth {
            Truth::Known(w) => name(w),
            Truth::Unknown => "UNKNOWN",
        };
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            s.row,
            set.labels[s.row],
            set.blocks[s.row],
            truth,
            name(s.predicted),
            s.max_prob,
            s.class_error
        );
        for &a in alphas {
            let d = match decide(bundle, s, Method::PerClass, a) {
                Decision::Known(w) => name(w),
                Decision::Unknown => "UNKNOWN",
            };
            let _ = write!(out, ",{d}");
        }
        out.push('\n');
    }
    out
}

pub fn default_alpha_grid() -> Vec<f64> {
    DEFAULT_ALPHA_GRID.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn three_rows_split_two_to_one() {
        let labels = strings(&["a", "a", "a"]);
        let spec = SplitSpec::new(strings(&["a"]), vec![], DEFAULT_TRAIN_FRACTION, 4);
        let s = split(&labels, &[0, 1, 2], &spec).unwrap();
        assert_eq!(s.train.len(), 2);
        assert_eq!(s.test_known.len(), 1);
        assert!(s.test_unknown.is_empty());
    }

    #[test]
    fn split_errors() {
        let labels = strings(&["a", "b", "b"]);
        let spec = SplitSpec::new(strings(&["a", "b"]), vec![], 0.5, 0);
        assert!(matches!(split(&labels, &[0, 0, 1], &spec), Err(Error::EmptyClass(_))));
        let spec = SplitSpec::new(strings(&["a", "b"]), strings(&["b"]), 0.5, 0);
        assert!(matches!(split(&labels, &[0, 0, 1], &spec), Err(Error::LabelOverlap(v)) if v == ["b"]));
        let spec = SplitSpec::new(strings(&["b"]), vec![], 1.0, 0);
        assert!(matches!(split(&labels, &[0, 0, 1], &spec), Err(Error::Config(_))));
    }

    #[test]
    fn no_unknowns_means_not_applicable() {
        let m = metrics(&[
            (Truth::Known(0), Decision::Known(0)),
            (Truth::Known(1), Decision::Known(0)),
            (Truth::Known(1), Decision::Unknown),
            (Truth::Known(1), Decision::Known(1)),
        ]);
        assert_eq!(m.known_acc, Some(50.0));
        assert_eq!((m.unk_recall, m.unk_precision, m.unk_f1), (None, None, None));
        assert_eq!(m.false_positive, 1);
    }

    #[test]
    fn metric_identities() {
        let out = [
            (Truth::Unknown, Decision::Unknown),
            (Truth::Unknown, Decision::Unknown),
            (Truth::Unknown, Decision::Known(0)),
            (Truth::Known(0), Decision::Unknown),
            (Truth::Known(0), Decision::Known(0)),
        ];
        let m = metrics(&out);
        let r = 200.0 / 3.0;
        let p = 200.0 / 3.0;
        assert!((m.unk_recall.unwrap() - r).abs() < 1e-12);
        assert!((m.unk_precision.unwrap() - p).abs() < 1e-12);
        assert!((m.unk_f1.unwrap() - 2.0 * r * p / (r + p)).abs() < 1e-9);
        assert_eq!(m.known_acc, Some(50.0));
        let c = confusion(&strings(&["a"]), &out);
        assert_eq!(c.counts, vec![vec![1, 1], vec![1, 2]]);
    }

    #[test]
    fn csv_header_and_na() {
        let r = OpenSetReport {
            method: Method::PerClass,
            alpha: 1.5,
            metrics: metrics(&[(Truth::Known(0), Decision::Known(0))]),
            confusion: confusion(&strings(&["a"]), &[]),
            inference_seconds: 0.25,
        };
        let csv = reports_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        assert_eq!(lines.next(), Some("1.5,100,NA,NA,NA,1,0,0.25"));
    }

    #[test]
    fn best_recall_filters_by_accuracy() {
        let p = |acc, rec| CurvePoint {
            method: Method::Softmax,
            param: 0.0,
            known_acc: acc,
            unk_recall: rec,
            unk_precision: 0.0,
            unk_f1: 0.0,
        };
        let pts = [p(99.0, 10.0), p(95.0, 50.0), p(90.0, 90.0)];
        assert_eq!(best_recall_at_accuracy(&pts, 96.0, 1.0).unwrap().unk_recall, 50.0);
        assert!(best_recall_at_accuracy(&pts, 101.0, 1.0).is_none());
    }
}
