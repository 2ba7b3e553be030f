//! Run the detector alone, without triage, restricted to some call kinds.
//!
//! cargo run --example detect -- corpus/canonical/internal_transfer.sol

use std::collections::BTreeSet;

use retriage::budget::Deadline;
use retriage::detector::{detect, DetectorConfig};
use retriage::flow::analyze_contracts;
use retriage::frontend::ast::CallKind;
use retriage::frontend::parse_source;
use retriage::lowering::linearize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "corpus/canonical/internal_transfer.sol".into());
    let text = std::fs::read_to_string(&path)?;
    let unit = parse_source(&text, &path)?;
    let facts = analyze_contracts(linearize(&unit, &[]).contracts, &Deadline::none())?;
    let all: BTreeSet<CallKind> = CallKind::EXTERNAL.into_iter().collect();
    let low_level: BTreeSet<CallKind> = all.iter().copied().filter(|k| matches!(k, CallKind::LowLevelCall)).collect();
    for (label, kinds) in [("all kinds", all), ("low-level only", low_level)] {
        let config = DetectorConfig { call_kinds: kinds, ..DetectorConfig::default() };
        let findings = detect(&path, &facts, &config, &Deadline::none())?;
        println!("{label}: {} finding(s)", findings.len());
        for f in findings {
            let targets: Vec<&str> = f.post_writes.iter().map(|w| w.target.as_str()).collect();
            println!("  {} {}.{} {} writes {:?}", f.location, f.contract, f.function, f.variant.as_str(), targets);
        }
    }
    Ok(())
}
