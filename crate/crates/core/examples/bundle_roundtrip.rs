//! Fits a small pipeline, saves it as one bundle file, reloads it and
//! checks that every decision survives the round trip.
//!
//! cargo run --release --example bundle_roundtrip

use acorn::bundle::Bundle;
use acorn::eval::run_openset;
use acorn::pipeline::{fit_all, generate_catalog, roles, PipelineConfig};
use acorn::synth::presets;

fn main() -> acorn::Result<()> {
    let cfg = PipelineConfig {
        subseq_len: 5_000,
        ..PipelineConfig::default()
    };
    let catalog = presets::benchmark_v1(&cfg.geometry);
    let seqs = generate_catalog(&catalog, 60 * cfg.subseq_len, &cfg.geometry)?;
    let (known, unknown) = roles(&catalog);
    let fitted = fit_all(&seqs, &cfg.split_spec(known, unknown), &cfg)?;

    let path = std::env::temp_dir().join("acorn-example.bundle");
    fitted.bundle.save(&path)?;
    let bytes = std::fs::metadata(&path)?.len();
    let loaded = Bundle::load(&path)?;
    println!("bundle {} ({bytes} bytes), layout {}", path.display(), &loaded.layout_hash()[..12]);

    let before = run_openset(&fitted.bundle, &fitted.features, &cfg.alpha_grid)?;
    let after = run_openset(&loaded, &fitted.features, &cfg.alpha_grid)?;
    println!("identical scores: {}", before.scored == after.scored);
    for (a, b) in before.reports.iter().zip(&after.reports) {
        println!("alpha {}: confusion identical {}", a.alpha, a.confusion == b.confusion);
    }

    // a flipped byte is caught by the checksum
    let mut raw = std::fs::read(&path)?;
    let mid = raw.len() / 2;
    raw[mid] ^= 0xff;
    println!("damaged bundle: {}", Bundle::from_bytes(&raw).unwrap_err());
    std::fs::remove_file(&path)?;
    Ok(())
}
