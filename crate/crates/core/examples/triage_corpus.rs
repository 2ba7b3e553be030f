//! Analyze every `.sol` file in a directory and print each verdict.
//!
//! cargo run --example triage_corpus -- corpus/canonical

use std::path::PathBuf;

use retriage::pipeline::{analyze_source, AnalysisConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("corpus/canonical"));
    let mut files: Vec<PathBuf> =
        std::fs::read_dir(&dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "sol")).collect();
    files.sort();
    let config = AnalysisConfig::default();
    for path in files {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path)?;
        match analyze_source(&name, &text, &config) {
            Ok(a) => {
                for d in &a.diagnostics {
                    println!("{name}:{} {:?} {}", d.span, d.severity, d.message);
                }
                for v in &a.verdicts {
                    let causes: Vec<&str> = v.causes.keys().map(|c| c.as_str()).collect();
                    println!(
                        "{name}:{} {}.{} {} {} [{}]",
                        v.finding.location,
                        v.finding.contract,
                        v.finding.function,
                        v.finding.variant.as_str(),
                        v.classification.as_str(),
                        causes.join(", ")
                    );
                }
            }
            Err(e) => println!("{name}: failed: {e}"),
        }
    }
    Ok(())
}
