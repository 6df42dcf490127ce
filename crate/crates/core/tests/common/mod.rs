//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use acorn::detect::Decision;
use acorn::eval::Truth;
use acorn::mlp::{Gradients, MlpModel};
use acorn::pipeline::{fit_all, generate_catalog, roles, Fitted, PipelineConfig};
use acorn::synth::presets;
use acorn::trace::Command;
use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts every length-`n` window by comparing it against every other
/// window: quadratic, no hashing, no packing.
pub fn brute_force_ngrams(cmds: &[Command], n: usize) -> BTreeMap<Vec<u8>, u64> {
    let mut out = BTreeMap::new();
    if cmds.len() < n {
        return out;
    }
    let windows = cmds.len() - n + 1;
    for i in 0..windows {
        let key: Vec<u8> = cmds[i..i + n].iter().map(|c| c.code()).collect();
        if out.contains_key(&key) {
            continue;
        }
        let count = (0..windows).filter(|&j| cmds[j..j + n] == cmds[i..i + n]).count();
        out.insert(key, count as u64);
    }
    out
}

/// One-sided (Hestenes) Jacobi SVD: rotates column pairs of `a` until they
/// are mutually orthogonal. Returns singular values in decreasing order and
/// the full `n x n` right singular matrix, columns matching the values.
pub fn reference_svd(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let (m, n) = a.dim();
    let mut u = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u.column(p).dot(&u.column(p));
                let beta: f64 = u.column(q).dot(&u.column(q));
                let gamma: f64 = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let (x, y) = (u[[k, p]], u[[k, q]]);
                    u[[k, p]] = c * x - s * y;
                    u[[k, q]] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * x - s * y;
                    v[[k, q]] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| u.column(j).dot(&u.column(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let values = order.iter().map(|&i| norms[i]).collect();
    let v = v.select(ndarray::Axis(1), &order);
    (values, v)
}

pub fn projector(v: ArrayView2<f64>) -> Array2<f64> {
    v.dot(&v.t())
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimal `r` whose leading squared singular values exceed `energy` of the
/// total, found by trying every `r` in turn.
pub fn energy_rank_scan(singular: &[f64], energy: f64, cap: usize) -> usize {
    let sq: Vec<f64> = singular.iter().map(|s| s * s).collect();
    let total: f64 = sq.iter().sum();
    for r in 1..=sq.len() {
        if sq[..r].iter().sum::<f64>() > energy * total {
            return r.min(cap);
        }
    }
    sq.len().min(cap)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

/// Random matrix of the given rank (or full rank when `rank >= min`).
pub fn random_low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> Array2<f64> {
    random_matrix(rng, rows, rank).dot(&random_matrix(rng, rank, cols))
}

/// Central differences of the mean cross-entropy for every parameter.
pub fn numeric_gradients(model: &MlpModel, x: ArrayView2<f64>, y: &[usize], h: f64) -> Gradients {
    let loss = |m: &MlpModel| m.loss_and_gradients(x, y).expect("shapes").0;
    let mut g = Gradients {
        w1: Array2::zeros(model.w1.raw_dim()),
        b1: Array1::zeros(model.b1.raw_dim()),
        w2: Array2::zeros(model.w2.raw_dim()),
        b2: Array1::zeros(model.b2.raw_dim()),
    };
    let probe = |edit: &dyn Fn(&mut MlpModel, f64)| {
        let mut plus = model.clone();
        edit(&mut plus, h);
        let mut minus = model.clone();
        edit(&mut minus, -h);
        (loss(&plus) - loss(&minus)) / (2.0 * h)
    };
    for idx in ndarray::indices(model.w1.raw_dim()) {
        g.w1[idx] = probe(&|m, d| m.w1[idx] += d);
    }
    for i in 0..model.b1.len() {
        g.b1[i] = probe(&|m, d| m.b1[i] += d);
    }
    for idx in ndarray::indices(model.w2.raw_dim()) {
        g.w2[idx] = probe(&|m, d| m.w2[idx] += d);
    }
    for i in 0..model.b2.len() {
        g.b2[i] = probe(&|m, d| m.b2[i] += d);
    }
    g
}

/// Smallest distance of any hidden pre-activation from the ReLU kink. A
/// central difference with step `h` is only valid when this exceeds `h`
/// times the largest input magnitude.
pub fn kink_margin(model: &MlpModel, x: ArrayView2<f64>) -> f64 {
    (x.dot(&model.w1) + &model.b1).iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

/// Largest `|a - n| / max(|a|, |n|, floor)` over all parameters.
pub fn max_relative_error(a: &Gradients, n: &Gradients) -> f64 {
    let pairs = a
        .w1
        .iter()
        .zip(&n.w1)
        .chain(a.b1.iter().zip(&n.b1))
        .chain(a.w2.iter().zip(&n.w2))
        .chain(a.b2.iter().zip(&n.b2));
    pairs
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-7))
        .fold(0.0, f64::max)
}

/// Known accuracy, unknown recall, precision and F1 (percent) recomputed
/// straight from a per-sample log.
pub struct OracleMetrics {
    pub known_acc: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

pub fn oracle_metrics(log: &[(Truth, Decision)]) -> OracleMetrics {
    let known: Vec<_> = log.iter().filter(|(t, _)| matches!(t, Truth::Known(_))).collect();
    let correct = known
        .iter()
        .filter(|(t, d)| matches!((t, d), (Truth::Known(a), Decision::Known(b)) if a == b))
        .count();
    let unknown_total = log.iter().filter(|(t, _)| *t == Truth::Unknown).count();
    let flagged = log.iter().filter(|(_, d)| *d == Decision::Unknown).count();
    let hits = log
        .iter()
        .filter(|(t, d)| *t == Truth::Unknown && *d == Decision::Unknown)
        .count();
    let recall = 100.0 * hits as f64 / unknown_total as f64;
    let precision = if flagged == 0 { 0.0 } else { 100.0 * hits as f64 / flagged as f64 };
    OracleMetrics {
        known_acc: 100.0 * correct as f64 / known.len() as f64,
        recall,
        precision,
        f1: if recall + precision == 0.0 { 0.0 } else { 2.0 * recall * precision / (recall + precision) },
    }
}

/// Desk-scale benchmark configuration.
pub fn benchmark_config() -> PipelineConfig {
    PipelineConfig {
        subseq_len: 10_000,
        ..PipelineConfig::default()
    }
}

/// Generates the built-in benchmark with `per_workload` subsequences per
/// workload and fits the whole pipeline.
pub fn fit_benchmark(per_workload: usize, cfg: &PipelineConfig) -> Fitted {
    let catalog = presets::benchmark_v1(&cfg.geometry);
    let seqs = generate_catalog(&catalog, per_workload * cfg.subseq_len, &cfg.geometry).expect("preset generates");
    let (known, unknown) = roles(&catalog);
    fit_all(&seqs, &cfg.split_spec(known, unknown), cfg).expect("pipeline fits")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
