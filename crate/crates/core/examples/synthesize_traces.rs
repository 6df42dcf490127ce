//! Generates every workload of the built-in benchmark catalog, checks each
//! trace against the bank state machine and shows the command mix.
//!
//! cargo run --release --example synthesize_traces

use std::collections::BTreeMap;

use acorn::pipeline::generate_catalog;
use acorn::synth::{check_protocol, presets, Role};
use acorn::trace::DramGeometry;

fn main() -> acorn::Result<()> {
    let geometry = DramGeometry::default();
    let catalog = presets::benchmark_v1(&geometry);
    let seqs = generate_catalog(&catalog, 50_000, &geometry)?;
    for ((_, role), seq) in catalog.entries.iter().zip(&seqs) {
        let mut mix = BTreeMap::new();
        for r in &seq.records {
            *mix.entry(r.cmd.symbol()).or_insert(0usize) += 1;
        }
        let banks: std::collections::BTreeSet<usize> = seq.records.iter().map(|r| r.bank_index(&geometry)).collect();
        let role = if *role == Role::Known { "known" } else { "unknown" };
        println!(
            "{:<22} {role:<8} clean={} banks={:<3} {:?}",
            seq.label,
            check_protocol(&seq.records, &geometry).is_clean(),
            banks.len(),
            mix
        );
    }
    let toml = catalog.to_toml();
    println!("catalog round-trips through {} lines of TOML", toml.lines().count());
    Ok(())
}
