//! Parses a small command trace, resolves bank indices and cuts it into
//! fixed-length subsequences.
//!
//! cargo run --example parse_and_partition

use acorn::trace::{parse_trace, partition, DramGeometry, IngestReport};

const TRACE: &str = "\
ACT,0,0,0,4100
RDA,0,0,0,17
RDA,0,0,0,18
PRE,0,0,0,0
ACT,1,3,2,70000
WRA,1,3,2,1023
PREA,1,0,0,0
ACT,0,2,1,8
RDA,0,2,1,8
PRE,0,2,1,0
";

fn main() -> acorn::Result<()> {
    let geometry = DramGeometry::default();
    let seq = parse_trace(TRACE.as_bytes(), &geometry, "demo")?;
    for r in &seq.records {
        println!("{:<24} bank {:>2}", r.to_string(), r.bank_index(&geometry));
    }

    let subseqs = partition(&seq, 4);
    let report = IngestReport::new(seq.len(), 4);
    println!(
        "{} records -> {} subsequences of 4, {} dropped",
        report.records, report.subsequences, report.dropped_records
    );
    for s in &subseqs {
        let cmds: Vec<String> = s.commands().map(|c| c.to_string()).collect();
        println!("  block {}: {}", s.source_block, cmds.join(" "));
    }

    // malformed input reports the offending line
    match parse_trace("ACT,0,0,0,1\nRDA,0,9,0,1\n".as_bytes(), &geometry, "bad") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
