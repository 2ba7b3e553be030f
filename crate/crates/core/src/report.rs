//! Serialized reports. The JSON field set is fixed; arrays are sorted by
//! (file, line).

use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::bench::{FileOutcome, FileStatus};
use crate::frontend::ast::{Diagnostic, Severity};
use crate::frontend::render::expr_text;
use crate::triage::{Evidence, RuleOutcome, Verdict};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub files: Vec<FileReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileReport {
    pub file: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub diagnostics: Vec<DiagnosticReport>,
    pub findings: Vec<FindingReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub line: u32,
    pub column: u32,
    pub severity: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauseReport {
    pub cause: String,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindingReport {
    pub id: String,
    pub contract: String,
    pub function: String,
    pub line: u32,
    pub column: u32,
    pub call_kind: &'static str,
    pub target: String,
    pub detector_variant: &'static str,
    pub post_writes: Vec<String>,
    pub causes: Vec<CauseReport>,
    pub classification: &'static str,
    pub rule_trace: Vec<RuleOutcome>,
}

impl From<&Diagnostic> for DiagnosticReport {
    fn from(d: &Diagnostic) -> Self {
        let severity = match d.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        };
        DiagnosticReport { line: d.span.line, column: d.span.column, severity, message: d.message.clone() }
    }
}

impl From<&Verdict> for FindingReport {
    fn from(v: &Verdict) -> Self {
        let f = &v.finding;
        FindingReport {
            id: f.id.clone(),
            contract: f.contract.clone(),
            function: f.function.clone(),
            line: f.location.line,
            column: f.location.column,
            call_kind: f.call_site.call_kind.as_str(),
            target: expr_text(&f.call_site.target_expr),
            detector_variant: f.variant.as_str(),
            post_writes: f.post_writes.iter().map(|w| w.display()).collect(),
            causes: v.causes.iter().map(|(c, ev)| CauseReport { cause: c.as_str().to_string(), evidence: ev.clone() }).collect(),
            classification: v.classification.as_str(),
            rule_trace: v.rule_trace.clone(),
        }
    }
}

impl From<&FileOutcome> for FileReport {
    fn from(o: &FileOutcome) -> Self {
        match &o.status {
            FileStatus::Analyzed(a) => FileReport {
                file: o.file.clone(),
                status: "analyzed",
                error: None,
                diagnostics: a.diagnostics.iter().map(DiagnosticReport::from).collect(),
                findings: a.verdicts.iter().map(FindingReport::from).collect(),
            },
            FileStatus::Failed { reason, timed_out } => FileReport {
                file: o.file.clone(),
                status: if *timed_out { "timed_out" } else { "failed" },
                error: Some(reason.clone()),
                diagnostics: Vec::new(),
                findings: Vec::new(),
            },
        }
    }
}

impl Report {
    pub fn new(timestamp: String, outcomes: &[FileOutcome]) -> Self {
        let mut files: Vec<FileReport> = outcomes.iter().map(FileReport::from).collect();
        files.sort_by(|a, b| a.file.cmp(&b.file));
        for f in &mut files {
            f.findings.sort_by(|a, b| (a.line, a.column, &a.id).cmp(&(b.line, b.column, &b.id)));
        }
        Report { tool: TOOL_NAME.into(), version: TOOL_VERSION.into(), timestamp, files }
    }

    pub fn likely_true_positives(&self) -> usize {
        self.files.iter().flat_map(|f| &f.findings).filter(|f| f.classification == "likely_true_positive").count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for f in &self.files {
            if let Some(e) = &f.error {
                let _ = writeln!(s, "{}: {}: {e}", f.file, f.status);
                continue;
            }
            for d in &f.diagnostics {
                let _ = writeln!(s, "{}:{}:{}: {}: {}", f.file, d.line, d.column, d.severity, d.message);
            }
            for x in &f.findings {
                let _ = writeln!(
                    s,
                    "{}:{}:{}: {} {}.{} via {} ({}) -> {}",
                    f.file, x.line, x.column, x.detector_variant, x.contract, x.function, x.target, x.call_kind, x.classification
                );
                if !x.post_writes.is_empty() {
                    let _ = writeln!(s, "    writes after call: {}", x.post_writes.join(", "));
                }
                for c in &x.causes {
                    for e in &c.evidence {
                        let _ = writeln!(s, "    {} at {}: {}", c.cause, e.span, e.text);
                    }
                }
            }
        }
        let n: usize = self.files.iter().map(|f| f.findings.len()).sum();
        let _ = writeln!(s, "{} file(s), {} finding(s), {} likely true positive(s)", self.files.len(), n, self.likely_true_positives());
        s
    }
}

/// RFC 3339 UTC timestamp; honors `SOURCE_DATE_EPOCH` for reproducible output.
pub fn run_timestamp() -> String {
    let epoch = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok());
    let t: DateTime<Utc> = epoch.and_then(|e| DateTime::from_timestamp(e, 0)).unwrap_or_else(Utc::now);
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}
