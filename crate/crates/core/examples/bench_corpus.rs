//! Score a labeled corpus with triage on and off.
//!
//! cargo run --example bench_corpus -- corpus/derived

use std::collections::BTreeSet;
use std::path::PathBuf;

use retriage::bench::{load_dir, read_labels, run_batch, BatchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("corpus/derived"));
    let labels = read_labels(std::fs::File::open(dir.join("labels.csv"))?)?;
    let on = BatchConfig::default();
    let mut off = BatchConfig::default();
    off.analysis.rules = BTreeSet::new();
    for (name, config) in [("triage on", on), ("triage off", off)] {
        let m = run_batch(load_dir(&dir)?, Some(&labels), &config).metrics;
        println!(
            "{name}: analyzed={} failed={} duplicates={} flagged={} tp={} suppressed={} precision={:?} reported_rate={:?}",
            m.analyzed_count, m.failed_count, m.duplicate_count, m.flagged_count, m.tp_count, m.suppressed_count, m.precision, m.reported_rate
        );
        for (cause, n) in m.per_cause_counts.iter().filter(|(_, n)| **n > 0) {
            println!("  {} {n}", cause.as_str());
        }
        for r in m.records.iter().filter(|r| !r.agrees) {
            println!("  disagrees: {}", r.describe());
        }
    }
    Ok(())
}
