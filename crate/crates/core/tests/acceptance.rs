//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! gating criterion fails.
//!
//! cargo test --test acceptance

mod common;

use std::time::{Duration, Instant};

use acorn::detect::{recon_error, Decision, SubspaceDetector, DEFAULT_ALPHA_GRID, DEFAULT_ENERGY};
use acorn::eval::{
    best_recall_at_accuracy, decide, naive_curve, reports_csv, reports_json, run_openset, softmax_curve, Method,
    OpenSetReport,
};
use acorn::features::{address_vector, bank_vector, count_ngrams};
use acorn::mlp::MlpModel;
use acorn::pipeline::Fitted;
use acorn::synth::{generate_workload, presets, SpatialMode, Workload, WorkloadProfile};
use acorn::trace::{partition, Command, DramGeometry, TraceRecord};
use common::*;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;

type Outcome = Result<String, String>;

const GRAD_STEP: f64 = 1e-4;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_line(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Command> {
    let len = rng.gen_range(0..=2000u32) as usize;
    if rng.gen_bool(0.5) {
        (0..len).map(|_| Command::ALL[rng.gen_range(0..5u32) as usize]).collect()
    } else {
        // low-entropy lines built from a few short motifs, so counts repeat
        let motifs: Vec<Vec<Command>> = (0..3)
            .map(|_| (0..rng.gen_range(1..6u32)).map(|_| Command::ALL[rng.gen_range(0..5u32) as usize]).collect())
            .collect();
        let mut line = Vec::with_capacity(len);
        while line.len() < len {
            line.extend_from_slice(&motifs[rng.gen_range(0..3u32) as usize]);
        }
        line.truncate(len);
        line
    }
}

fn ngram_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut windows = 0u64;
    for case in 0..100 {
        let line = random_line(&mut rng);
        for n in [2, 3, 7, 11, 15] {
            let fast: std::collections::BTreeMap<Vec<u8>, u64> = count_ngrams(line.iter().copied(), n)
                .into_iter()
                .map(|(g, c)| (g.commands().iter().map(|c| c.code()).collect(), c))
                .collect();
            let slow = brute_force_ngrams(&line, n);
            check(fast == slow, || format!("line {case} (length {}), n = {n}: counts differ", line.len()))?;
            windows += slow.values().sum::<u64>();
        }
    }
    let took = start.elapsed();
    check(took < Duration::from_secs(10), || format!("took {took:.1?}"))?;
    Ok(format!("100 lines, {windows} windows, {took:.1?}"))
}

fn random_records(rng: &mut rand_chacha::ChaCha8Rng, g: &DramGeometry, len: usize) -> Vec<TraceRecord> {
    (0..len)
        .map(|_| {
            let cmd = Command::ALL[rng.gen_range(0..5u32) as usize];
            let rank = rng.gen_range(0..g.ranks) as u8;
            let bg = rng.gen_range(0..g.bank_groups_per_rank) as u8;
            let bank = rng.gen_range(0..g.banks_per_group) as u8;
            let address = match cmd {
                Command::Act => rng.gen_range(0..g.rows_per_bank),
                Command::Rda | Command::Wra => rng.gen_range(0..g.cols_per_bank),
                _ => 0,
            };
            TraceRecord::new(cmd, rank, bg, bank, address)
        })
        .collect()
}

fn mass_conservation() -> Outcome {
    let g = DramGeometry::default();
    let mut rng = rng(202);
    let catalog = presets::benchmark_v1(&g);
    let profiles: Vec<WorkloadProfile> = catalog
        .workloads()
        .filter_map(|w| match w {
            Workload::Profile(p) => Some(p.clone()),
            _ => None,
        })
        .collect();
    let mut orphans_seen = 0;
    for case in 0..1000 {
        let l_s = rng.gen_range(1..=3000u32) as usize;
        let records = if case % 2 == 0 {
            random_records(&mut rng, &g, l_s)
        } else {
            let mut p = profiles[case / 2 % profiles.len()].clone();
            p.seed = rng.gen();
            p.motif_noise = rng.gen_range(0.0..0.5);
            if case % 4 == 1 {
                p.spatial = SpatialMode::UniformRandom;
            }
            // start mid-trace so some accesses have no visible activation
            let skip = rng.gen_range(0..20u32) as usize;
            let seq = generate_workload(&p, l_s + skip, &g).map_err(|e| e.to_string())?;
            partition(&acorn::trace::WorkloadSequence::new("x", seq.records[skip..].to_vec()), l_s)
                .remove(0)
                .records
        };
        let banks: f64 = bank_vector(&records, &g).iter().sum();
        check(banks == l_s as f64, || format!("case {case}: bank mass {banks} != {l_s}"))?;
        let addr = address_vector(&records, &g);
        let accesses = records.iter().filter(|r| r.cmd.is_access()).count();
        let blocks: f64 = addr.blocks.iter().sum();
        check(blocks + addr.orphans as f64 == accesses as f64, || {
            format!("case {case}: {blocks} + {} orphans != {accesses} accesses", addr.orphans)
        })?;
        orphans_seen += addr.orphans;
    }
    Ok(format!("1000 subsequences, {orphans_seen} orphan accesses"))
}

fn svd_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(303);
    let mut worst_orth = 0.0f64;
    let mut worst_proj = 0.0f64;
    for case in 0..50 {
        let rows = rng.gen_range(1..=100u32) as usize;
        let cols = rng.gen_range(1..=50u32) as usize;
        let x = if case % 3 == 0 {
            let rank = rng.gen_range(1..=rows.min(cols) as u32) as usize;
            random_low_rank(&mut rng, rows, cols, rank)
        } else {
            random_matrix(&mut rng, rows, cols)
        };
        let d = SubspaceDetector::fit(&x, DEFAULT_ENERGY).map_err(|e| format!("case {case}: {e}"))?;
        let v = &d.basis;
        let orth = frobenius(&(v.t().dot(v) - Array2::<f64>::eye(d.rank())));
        worst_orth = worst_orth.max(orth);
        check(orth < 1e-8, || format!("case {case} ({rows}x{cols}): orthonormality error {orth:e}"))?;

        let (sigma, v_ref) = reference_svd(&x);
        let r_ref = energy_rank_scan(&sigma, DEFAULT_ENERGY, rows.min(cols));
        check(d.rank() == r_ref, || format!("case {case}: rank {} but scan gives {r_ref}", d.rank()))?;
        let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
        let total: f64 = sq.iter().sum();
        check(sq[..r_ref].iter().sum::<f64>() > DEFAULT_ENERGY * total, || format!("case {case}: rank fails"))?;
        if r_ref > 1 {
            check(sq[..r_ref - 1].iter().sum::<f64>() <= DEFAULT_ENERGY * total, || {
                format!("case {case}: rank - 1 also passes")
            })?;
        }
        let reference = projector(v_ref.slice(ndarray::s![.., ..r_ref]));
        let diff = frobenius(&(projector(v.view()) - reference));
        worst_proj = worst_proj.max(diff);
        check(diff < 1e-6, || format!("case {case} ({rows}x{cols}): projector differs by {diff:e}"))?;
    }
    let took = start.elapsed();
    check(took < Duration::from_secs(30), || format!("took {took:.1?}"))?;
    Ok(format!("50 matrices, max orthonormality {worst_orth:.1e}, max projector gap {worst_proj:.1e}, {took:.1?}"))
}

fn recon_identities() -> Outcome {
    let mut rng = rng(404);
    let x = random_low_rank(&mut rng, 60, 30, 6);
    let d = SubspaceDetector::fit(&x, 0.999999).map_err(|e| e.to_string())?;
    let v = &d.basis;
    let q = v.t();
    let mut worst_in = 0.0f64;
    let mut worst_orth = 0.0f64;
    for _ in 0..200 {
        let coeffs = Array1::from_shape_fn(d.rank(), |_| rng.gen_range(-5.0..5.0));
        let inside = v.dot(&coeffs);
        let e = recon_error(v, inside.view()).map_err(|e| e.to_string())?;
        worst_in = worst_in.max(e);
        check(e < 1e-10, || format!("in-span error {e:e}"))?;

        let mut outside: Array1<f64> = Array1::from_shape_fn(v.nrows(), |_| rng.gen_range(-5.0..5.0));
        for _ in 0..2 {
            let c = q.dot(&outside);
            outside = &outside - &v.dot(&c);
        }
        let norm: f64 = outside.dot(&outside).sqrt();
        let e = recon_error(v, outside.view()).map_err(|e| e.to_string())?;
        worst_orth = worst_orth.max((e - norm).abs());
        check((e - norm).abs() < 1e-10, || format!("orthogonal error {e} vs norm {norm}"))?;
    }
    for i in 0..1000 {
        let probe: Array1<f64> = Array1::from_shape_fn(v.nrows(), |_| rng.gen_range(-10.0..10.0));
        let norm: f64 = probe.dot(&probe).sqrt();
        let e = recon_error(v, probe.view()).map_err(|e| e.to_string())?;
        check(e <= norm + 1e-9, || format!("probe {i}: error {e} exceeds norm {norm}"))?;
    }
    Ok(format!("max in-span {worst_in:.1e}, max orthogonal gap {worst_orth:.1e}, 1000 probes contracted"))
}

fn gradient_check() -> Outcome {
    let mut rng = rng(505);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let (f, h, c) = if case == 0 {
            (5, 4, 3)
        } else {
            (rng.gen_range(2..8u32) as usize, rng.gen_range(2..8u32) as usize, rng.gen_range(2..5u32) as usize)
        };
        let batch = rng.gen_range(1..6u32) as usize;
        let labels: Vec<String> = (0..c).map(|i| format!("c{i}")).collect();
        let mut model = MlpModel::init(f, h, labels, rng.gen());
        model.b1.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        model.b2.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        // redraw inputs until no finite-difference step can cross a ReLU kink
        let mut x = random_matrix(&mut rng, batch, f);
        while kink_margin(&model, x.view()) < 10.0 * GRAD_STEP {
            x = random_matrix(&mut rng, batch, f);
        }
        let y: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..c as u32) as usize).collect();
        let (_, analytic) = model.loss_and_gradients(x.view(), &y).map_err(|e| e.to_string())?;
        let numeric = numeric_gradients(&model, x.view(), &y, GRAD_STEP);
        let err = max_relative_error(&analytic, &numeric);
        worst = worst.max(err);
        check(err < 1e-3, || format!("instance {case} ({f}x{h}x{c}): relative error {err:e}"))?;
    }
    Ok(format!("20 instances, max relative error {worst:.1e}"))
}

fn alpha_monotonicity(fitted: &Fitted) -> Outcome {
    let b = &fitted.bundle;
    let eval = run_openset(b, &fitted.features, &DEFAULT_ALPHA_GRID).map_err(|e| e.to_string())?;
    for pair in eval.reports.windows(2) {
        let (lo, hi) = (&pair[0].metrics, &pair[1].metrics);
        check(hi.known_acc >= lo.known_acc, || format!("known acc falls at alpha {}", pair[1].alpha))?;
        check(hi.unk_recall <= lo.unk_recall, || format!("recall rises at alpha {}", pair[1].alpha))?;
    }
    let mut flips = 0;
    for s in &eval.scored {
        let mut was_known = false;
        for &alpha in &DEFAULT_ALPHA_GRID {
            let known = !decide(b, s, Method::PerClass, alpha).is_unknown();
            if was_known && !known {
                flips += 1;
            }
            was_known = known;
        }
    }
    check(flips == 0, || format!("{flips} samples flip Known to Unknown as alpha rises"))?;
    let acc: Vec<String> = eval
        .reports
        .iter()
        .map(|r| format!("{:.1}", r.metrics.known_acc.unwrap_or(f64::NAN)))
        .collect();
    Ok(format!("{} test samples, known acc by alpha [{}], no flips", eval.scored.len(), acc.join(", ")))
}

fn end_to_end(fitted: &Fitted, fit_time: Duration, per_workload: usize) -> Outcome {
    let start = Instant::now();
    let b = &fitted.bundle;
    let known_rows = fitted.features.labels.iter().filter(|l| b.split.known.contains(l)).count();
    let per_class = known_rows / b.split.known.len();
    check(per_class >= 200, || format!("only {per_class} subsequences per class"))?;
    check(b.split.known.len() == 6 && b.split.unknown.len() == 2, || "preset must have 6 known and 2 unknown".into())?;
    let eval = run_openset(b, &fitted.features, &[3.0]).map_err(|e| e.to_string())?;
    let m = &eval.reports[0].metrics;
    let acc = m.known_acc.ok_or("no known test samples")?;
    let recall = m.unk_recall.ok_or("no unknown test samples")?;
    let f1 = m.unk_f1.unwrap_or(0.0);
    check(acc >= 90.0, || format!("known acc {acc:.2} < 90"))?;
    check(f1 >= 80.0, || format!("unknown F1 {f1:.2} < 80"))?;
    let mut versus = Vec::new();
    for (name, curve) in [
        ("naive svd", naive_curve(b, &eval.scored).ok_or("no naive detector")?),
        ("softmax", softmax_curve(&eval.scored)),
    ] {
        let best = best_recall_at_accuracy(&curve, acc, 1.0)
            .ok_or_else(|| format!("{name} never reaches known acc {:.2}", acc - 1.0))?;
        check(recall > best.unk_recall, || {
            format!(
                "{name} reaches recall {:.2} at known acc {:.2}, per-class has {recall:.2}",
                best.unk_recall, best.known_acc
            )
        })?;
        versus.push(format!("{name} {:.1} at acc {:.1}", best.unk_recall, best.known_acc));
    }
    let total = fit_time + start.elapsed();
    check(total < Duration::from_secs(600), || format!("took {total:.1?}"))?;
    Ok(format!(
        "{per_workload} subsequences/workload; alpha 3: known acc {acc:.2}, recall {recall:.2}, F1 {f1:.2}; \
         best baseline recall at matched acc: {}; {total:.1?}",
        versus.join(", ")
    ))
}

/// Report text with the wall-clock column zeroed; everything else must
/// match byte for byte.
fn timing_free(reports: &[OpenSetReport]) -> (String, String) {
    let mut r = reports.to_vec();
    for x in &mut r {
        x.inference_seconds = 0.0;
    }
    (reports_csv(&r), reports_json(&r).expect("serializes"))
}

fn determinism(first: &Fitted, per_workload: usize) -> Outcome {
    let cfg = benchmark_config();
    let second = fit_benchmark(per_workload, &cfg);
    let a = first.bundle.to_bytes().map_err(|e| e.to_string())?;
    let b = second.bundle.to_bytes().map_err(|e| e.to_string())?;
    check(a == b, || "bundles differ between identical runs".into())?;
    let ra = run_openset(&first.bundle, &first.features, &DEFAULT_ALPHA_GRID).map_err(|e| e.to_string())?;
    let rb = run_openset(&second.bundle, &second.features, &DEFAULT_ALPHA_GRID).map_err(|e| e.to_string())?;
    check(timing_free(&ra.reports) == timing_free(&rb.reports), || "reports differ between identical runs".into())?;
    let artifacts = |f: &Fitted, e: &acorn::eval::Evaluation| {
        let mut curve = acorn::eval::per_class_curve(&f.bundle, &e.scored, &DEFAULT_ALPHA_GRID);
        curve.extend(naive_curve(&f.bundle, &e.scored).unwrap_or_default());
        curve.extend(softmax_curve(&e.scored));
        (
            acorn::eval::curve_csv(&curve),
            acorn::eval::decision_log_csv(&f.bundle, &f.features, &e.scored, &DEFAULT_ALPHA_GRID),
        )
    };
    check(artifacts(first, &ra) == artifacts(&second, &rb), || "curves or decision logs differ".into())?;

    let loaded = acorn::bundle::Bundle::from_bytes(&a).map_err(|e| e.to_string())?;
    check(loaded.to_bytes().map_err(|e| e.to_string())? == a, || "reload does not re-serialize identically".into())?;
    let all: Vec<usize> = (0..first.features.len()).collect();
    let before = acorn::eval::score(&first.bundle, &first.features, &ra.scored.iter().map(|s| s.row).collect::<Vec<_>>())
        .map_err(|e| e.to_string())?;
    let after = acorn::eval::score(&loaded, &first.features, &ra.scored.iter().map(|s| s.row).collect::<Vec<_>>())
        .map_err(|e| e.to_string())?;
    check(before == after, || "scores change after reload".into())?;
    let mut decisions = 0;
    for (s, t) in before.iter().zip(&after) {
        for &alpha in &DEFAULT_ALPHA_GRID {
            for method in [Method::PerClass, Method::NaiveSvd] {
                check(decide(&first.bundle, s, method, alpha) == decide(&loaded, t, method, alpha), || {
                    format!("row {} changes decision at alpha {alpha}", s.row)
                })?;
                decisions += 1;
            }
        }
    }
    // every row, including training rows, through the detector bank directly
    let bank = first.bundle.detectors.as_ref().ok_or("no detectors")?;
    let bank2 = loaded.detectors.as_ref().ok_or("no detectors after reload")?;
    for &row in &all {
        let x = first.bundle.standardizer.apply(first.features.data.index_axis(Axis(0), row));
        let (w, _) = first.bundle.model.predict(x.view()).map_err(|e| e.to_string())?;
        let x2 = loaded.standardizer.apply(first.features.data.index_axis(Axis(0), row));
        let (w2, _) = loaded.model.predict(x2.view()).map_err(|e| e.to_string())?;
        let d: Decision = bank.decide(x.view(), w, 3.0).map_err(|e| e.to_string())?;
        let d2 = bank2.decide(x2.view(), w2, 3.0).map_err(|e| e.to_string())?;
        check(d == d2, || format!("row {row}: {d:?} vs {d2:?} after reload"))?;
        decisions += 1;
    }
    Ok(format!("bundles identical ({} bytes), reports, curves and decision logs identical, {decisions} decisions preserved", a.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, outcome: Outcome| {
        match &outcome {
            Ok(detail) => println!("criterion {n} [{name}]: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} [{name}]: FAIL ({why})");
            }
        }
    };
    report(1, "n-gram oracle equivalence", ngram_oracle());
    report(2, "feature mass conservation", mass_conservation());
    report(3, "SVD correctness", svd_correctness());
    report(4, "reconstruction-error identities", recon_identities());
    report(5, "classifier gradient check", gradient_check());

    let per_workload = 240;
    let start = Instant::now();
    let fitted = fit_benchmark(per_workload, &benchmark_config());
    let fit_time = start.elapsed();
    report(6, "alpha monotonicity", alpha_monotonicity(&fitted));
    report(7, "end-to-end desk-scale benchmark", end_to_end(&fitted, fit_time, per_workload));
    report(8, "determinism and persistence", determinism(&fitted, per_workload));
    println!("criterion 9 [external corpus]: SKIP (non-gating; no external trace corpus present)");

    if failed > 0 {
        println!("{failed} gating criteria failed");
        std::process::exit(1);
    }
    println!("all gating criteria passed");
}
