//! Generates the built-in synthetic benchmark, fits the full pipeline and
//! compares the per-class detectors with both baselines.
//!
//! cargo run --release --example open_set_benchmark -- [subsequences-per-workload]

use std::time::Instant;

use acorn::eval::{
    best_recall_at_accuracy, naive_curve, per_class_curve, reports_csv, run_openset, softmax_curve,
};
use acorn::pipeline::{fit_all, generate_catalog, roles, PipelineConfig};
use acorn::synth::presets;

fn main() -> acorn::Result<()> {
    let per_workload: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(240);
    let cfg = PipelineConfig {
        subseq_len: 10_000,
        ..PipelineConfig::default()
    };
    let start = Instant::now();
    let catalog = presets::benchmark_v1(&cfg.geometry);
    let seqs = generate_catalog(&catalog, per_workload * cfg.subseq_len, &cfg.geometry)?;
    let (known, unknown) = roles(&catalog);
    let spec = cfg.split_spec(known, unknown);
    let fitted = fit_all(&seqs, &spec, &cfg)?;
    let b = &fitted.bundle;
    println!(
        "features: {} rows x {} columns, fitted in {:.1?}",
        fitted.features.len(),
        fitted.features.dim(),
        start.elapsed()
    );
    for (label, d) in b.labels().iter().zip(&b.detectors.as_ref().unwrap().detectors) {
        let cal = d.calibration.unwrap();
        println!("  {label:<14} rank {:>3}  mean {:.4}  std {:.4}", d.rank(), cal.mean, cal.std);
    }

    let eval = run_openset(b, &fitted.features, &cfg.alpha_grid)?;
    print!("{}", reports_csv(&eval.reports));

    let at3 = eval.reports.last().unwrap();
    let acc = at3.metrics.known_acc.unwrap();
    let recall = at3.metrics.unk_recall.unwrap();
    let softmax = softmax_curve(&eval.scored);
    let naive = naive_curve(b, &eval.scored).unwrap();
    for (name, curve) in [("softmax", &softmax), ("naive svd", &naive)] {
        match best_recall_at_accuracy(curve, acc, 1.0) {
            Some(p) => println!(
                "{name:<10} best recall {:.2} at known acc {:.2} (param {:.4}) vs per-class {recall:.2}",
                p.unk_recall, p.known_acc, p.param
            ),
            None => println!("{name:<10} never reaches known acc {:.2}", acc - 1.0),
        }
    }
    let dense: Vec<f64> = (0..=8).map(|i| i as f64 * 0.5).collect();
    for p in per_class_curve(b, &eval.scored, &dense) {
        println!("  alpha {:<4} known acc {:6.2}  unknown recall {:6.2}", p.param, p.known_acc, p.unk_recall);
    }
    println!("total {:.1?}", start.elapsed());
    Ok(())
}
