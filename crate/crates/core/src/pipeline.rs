//! One file through the whole pipeline: parse, flatten, analyze, detect,
//! triage.

use std::collections::BTreeSet;
use std::time::Duration;

use thiserror::Error;

use crate::budget::{Deadline, TimedOut};
use crate::detector::{detect, DetectorConfig};
use crate::flow::analyze_contracts;
use crate::frontend::{parse_bytes, Diagnostic, ParseError, ParseOptions};
use crate::lowering::linearize;
use crate::triage::{triage, CauseType, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub detector: DetectorConfig,
    pub rules: BTreeSet<CauseType>,
    /// Per-file budget; `None` means unbounded.
    pub timeout: Option<Duration>,
    pub parse: ParseOptions,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            detector: DetectorConfig::default(),
            rules: CauseType::all(),
            timeout: Some(Duration::from_secs(120)),
            parse: ParseOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    TimedOut(#[from] TimedOut),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileAnalysis {
    pub file: String,
    pub diagnostics: Vec<Diagnostic>,
    /// Sorted by line.
    pub verdicts: Vec<Verdict>,
}

pub fn analyze_bytes(file: &str, bytes: &[u8], config: &AnalysisConfig, deadline: &Deadline) -> Result<FileAnalysis, FileError> {
    let unit = parse_bytes(bytes, file, &config.parse)?;
    deadline.check()?;
    let lowered = linearize(&unit, &[]);
    let mut diagnostics = unit.diagnostics.clone();
    diagnostics.extend(lowered.diagnostics.iter().cloned());
    diagnostics.sort();
    diagnostics.dedup();
    let facts = analyze_contracts(lowered.contracts, deadline)?;
    let findings = detect(file, &facts, &config.detector, deadline)?;
    let mut verdicts = Vec::with_capacity(findings.len());
    for f in &findings {
        deadline.check()?;
        verdicts.push(triage(f, &facts, &config.rules));
    }
    Ok(FileAnalysis { file: file.to_string(), diagnostics, verdicts })
}

pub fn analyze_source(file: &str, text: &str, config: &AnalysisConfig) -> Result<FileAnalysis, FileError> {
    let deadline = config.timeout.map(Deadline::after).unwrap_or_default();
    analyze_bytes(file, text.as_bytes(), config, &deadline)
}
