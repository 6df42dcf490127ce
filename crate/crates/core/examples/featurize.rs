//! Builds an n-gram vocabulary from two synthetic workloads and turns a
//! subsequence into its command, bank and block feature sections.
//!
//! cargo run --release --example featurize

use acorn::features::{build_vocab, FeatureLayout, DEFAULT_N_VALUES, DEFAULT_TOP_M};
use acorn::synth::presets;
use acorn::trace::{partition, Command, DramGeometry};

fn main() -> acorn::Result<()> {
    let geometry = DramGeometry::default();
    let catalog = presets::benchmark_v1(&geometry);
    let mut classes = Vec::new();
    let mut first = None;
    for name in ["hot-rw", "strided-copy"] {
        let seq = catalog.get(name).expect("preset workload").generate(40_000, &geometry)?;
        let subseqs = partition(&seq, 10_000);
        let lines: Vec<Vec<Command>> = subseqs.iter().map(|s| s.commands().collect()).collect();
        first.get_or_insert_with(|| subseqs[0].clone());
        classes.push((name.to_string(), lines));
    }
    let vocab = build_vocab(&classes, &DEFAULT_N_VALUES, DEFAULT_TOP_M)?;
    println!("vocabulary sizes per n {:?} = {}", vocab.sizes(), vocab.len());
    for (i, n) in DEFAULT_N_VALUES.iter().enumerate() {
        let top: Vec<String> = vocab.grams(i).iter().take(2).map(|g| g.to_string()).collect();
        println!("  n={n:<2} first entries: {}", top.join(" | "));
    }

    let layout = FeatureLayout::new(vocab, geometry);
    let sub = first.expect("one subsequence");
    let (x, orphans) = layout.featurize_records(&sub.records);
    let (bank_at, block_at) = layout.offsets();
    let sum = |s: &[f64]| s.iter().sum::<f64>();
    println!("feature length {} (layout {})", x.len(), &layout.hash()[..12]);
    println!("  command section mass {}", sum(&x[..bank_at]));
    println!("  bank section mass    {} (= subsequence length)", sum(&x[bank_at..block_at]));
    println!("  block section mass   {} + {orphans} orphans (= reads + writes)", sum(&x[block_at..]));
    let hot: Vec<usize> = (0..layout.geometry.block_count()).filter(|&b| x[block_at + b] > 0.0).collect();
    println!("  touched blocks {hot:?}");
    Ok(())
}
