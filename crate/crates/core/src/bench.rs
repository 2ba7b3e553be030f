//! Batch runs over a corpus: loading, deduplication, labels, per-file
//! timeouts and metrics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::budget::Deadline;
use crate::frontend::lexer::token_texts;
use crate::pipeline::{analyze_bytes, AnalysisConfig, FileAnalysis};
use crate::triage::{CauseType, Classification};

/// Stack for analysis threads; the parser's depth guard keeps recursion
/// well inside this.
const ANALYSIS_STACK: usize = 32 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    /// Path relative to the corpus root, `/`-separated.
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// All `.sol` files under `dir`, sorted by name.
pub fn load_dir(dir: &Path) -> Result<Vec<SourceFile>, CorpusError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|source| CorpusError::Io { path: d.clone(), source })?;
        for e in entries {
            let path = e.map_err(|source| CorpusError::Io { path: d.clone(), source })?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "sol") {
                let bytes = std::fs::read(&path).map_err(|source| CorpusError::Io { path: path.clone(), source })?;
                let rel = path.strip_prefix(dir).unwrap_or(&path);
                let name = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.push(SourceFile { name, bytes });
            }
        }
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// Hash of the token stream, so layout and comments do not matter.
pub fn normalized_hash(text: &str) -> String {
    let mut h = Sha256::new();
    for (_, t) in token_texts(text) {
        h.update(t.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Deduped {
    pub kept: Vec<SourceFile>,
    /// Copies of a file with a smaller name.
    pub removed: Vec<String>,
    /// Files that are not UTF-8, with the reason.
    pub unreadable: Vec<(String, String)>,
}

/// Keep the file with the smallest name in every group with the same
/// normalized source, whatever the input order.
pub fn dedupe(mut files: Vec<SourceFile>) -> Deduped {
    files.sort_by(|a, b| a.name.cmp(&b.name));
    let mut seen = BTreeSet::new();
    let mut out = Deduped::default();
    for f in files {
        match std::str::from_utf8(&f.bytes) {
            Ok(text) => {
                if seen.insert(normalized_hash(text)) {
                    out.kept.push(f);
                } else {
                    out.removed.push(f.name);
                }
            }
            Err(e) => out.unreadable.push((f.name, format!("not valid UTF-8: {e}"))),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    TP,
    FP,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusRecord {
    pub file: String,
    pub contract: String,
    pub function: String,
    pub label: Label,
    pub expected_cause: Option<CauseType>,
}

impl CorpusRecord {
    fn key(&self) -> (&str, &str, &str) {
        (&self.file, &self.contract, &self.function)
    }
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("cannot read labels: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed label rows: {}", rows.iter().map(|(n, m)| format!("row {n}: {m}")).collect::<Vec<_>>().join("; "))]
    Malformed { rows: Vec<(usize, String)> },
    #[error("labels reference missing files: {}", .0.join(", "))]
    MissingFiles(Vec<String>),
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    file: String,
    contract: String,
    function: String,
    label: String,
    #[serde(default)]
    cause: String,
}

/// Parse a label CSV (`file,contract,function,label,cause`). Row numbers in
/// errors count the header as row 1.
pub fn read_labels(reader: impl std::io::Read) -> Result<Vec<CorpusRecord>, LabelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut bad = Vec::new();
    let mut out: Vec<CorpusRecord> = Vec::new();
    let mut keys = BTreeSet::new();
    match rdr.headers() {
        Ok(h) if h.iter().collect::<Vec<_>>() == ["file", "contract", "function", "label", "cause"] => {}
        Ok(h) => bad.push((1, format!("unexpected header `{}`", h.iter().collect::<Vec<_>>().join(",")))),
        Err(e) => bad.push((1, e.to_string())),
    }
    for (i, row) in rdr.deserialize::<RawRecord>().enumerate() {
        let n = i + 2;
        let raw = match row {
            Ok(r) => r,
            Err(e) => {
                bad.push((n, e.to_string()));
                continue;
            }
        };
        let label = match raw.label.as_str() {
            "TP" => Label::TP,
            "FP" => Label::FP,
            other => {
                bad.push((n, format!("label must be TP or FP, got `{other}`")));
                continue;
            }
        };
        let expected_cause = if raw.cause.is_empty() {
            None
        } else {
            match raw.cause.parse::<CauseType>() {
                Ok(c) => Some(c),
                Err(e) => {
                    bad.push((n, e.to_string()));
                    continue;
                }
            }
        };
        if label == Label::FP && expected_cause.is_none() {
            bad.push((n, "FP rows need a cause".into()));
            continue;
        }
        if raw.file.is_empty() || raw.contract.is_empty() || raw.function.is_empty() {
            bad.push((n, "file, contract and function are required".into()));
            continue;
        }
        if !keys.insert((raw.file.clone(), raw.contract.clone(), raw.function.clone())) {
            bad.push((n, format!("duplicate record {}:{}.{}", raw.file, raw.contract, raw.function)));
            continue;
        }
        out.push(CorpusRecord { file: raw.file, contract: raw.contract, function: raw.function, label, expected_cause });
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(LabelError::Malformed { rows: bad })
    }
}

pub fn read_labels_file(path: &Path) -> Result<Vec<CorpusRecord>, LabelError> {
    read_labels(std::fs::File::open(path)?)
}

/// Every labeled file must be part of the corpus.
pub fn check_label_files(records: &[CorpusRecord], files: &[SourceFile]) -> Result<(), LabelError> {
    let names: BTreeSet<&str> = files.iter().map(|f| f.name.as_str()).collect();
    let missing: BTreeSet<String> =
        records.iter().filter(|r| !names.contains(r.file.as_str())).map(|r| r.file.clone()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(LabelError::MissingFiles(missing.into_iter().collect()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FileStatus {
    Analyzed(FileAnalysis),
    Failed { reason: String, timed_out: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileOutcome {
    pub file: String,
    pub status: FileStatus,
}

impl FileOutcome {
    pub fn analysis(&self) -> Option<&FileAnalysis> {
        match &self.status {
            FileStatus::Analyzed(a) => Some(a),
            FileStatus::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub analysis: AnalysisConfig,
    pub workers: usize,
    pub dedupe: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { analysis: AnalysisConfig::default(), workers: 4, dedupe: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordOutcome {
    pub file: String,
    pub contract: String,
    pub function: String,
    pub label: Label,
    pub expected_cause: Option<CauseType>,
    pub reported: bool,
    /// Likely true positive if any finding in the function is.
    pub classification: Option<Classification>,
    pub causes: Vec<CauseType>,
    pub agrees: bool,
}

impl RecordOutcome {
    pub fn describe(&self) -> String {
        let expected = match (self.label, self.expected_cause) {
            (Label::TP, _) => "likely_true_positive".to_string(),
            (Label::FP, Some(c)) => format!("suppressed_false_positive with {c}"),
            (Label::FP, None) => "suppressed_false_positive".to_string(),
        };
        let actual = match self.classification {
            None => "no finding".to_string(),
            Some(c) => {
                let causes: Vec<&str> = self.causes.iter().map(|c| c.as_str()).collect();
                format!("{} [{}]", c.as_str(), causes.join(", "))
            }
        };
        format!("{}:{}.{}: expected {expected}, got {actual}", self.file, self.contract, self.function)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub analyzed_count: usize,
    pub failed_count: usize,
    pub duplicate_count: usize,
    /// Findings before triage.
    pub reported_count: usize,
    /// Files with at least one finding before triage.
    pub reported_contracts: usize,
    /// Findings left as likely true positives after triage.
    pub flagged_count: usize,
    /// Flagged findings whose function is labeled TP.
    pub tp_count: usize,
    pub suppressed_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_rate: Option<f64>,
    pub per_cause_counts: BTreeMap<CauseType, usize>,
    pub records: Vec<RecordOutcome>,
}

impl MetricsReport {
    pub fn all_records_agree(&self) -> bool {
        self.records.iter().all(|r| r.agrees)
    }

    /// Rows for a cause-per-line table.
    pub fn text_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<28}{:>8}", "cause", "count");
        for (c, n) in &self.per_cause_counts {
            let _ = writeln!(s, "{:<28}{:>8}", c.as_str(), n);
        }
        let _ = writeln!(s, "{:<28}{:>8}", "total suppressed", self.suppressed_count);
        let _ = writeln!(s);
        let ratio = |r: Option<f64>| r.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(s, "analyzed {}  failed {}  duplicates {}", self.analyzed_count, self.failed_count, self.duplicate_count);
        let _ = writeln!(
            s,
            "findings {}  reported files {}  flagged {}  true positives {}",
            self.reported_count, self.reported_contracts, self.flagged_count, self.tp_count
        );
        let _ = writeln!(s, "precision {}  reported rate {}", ratio(self.precision), ratio(self.reported_rate));
        s
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn analyze_one(file: SourceFile, config: &AnalysisConfig) -> FileOutcome {
    let deadline = config.timeout.map(Deadline::after).unwrap_or_default();
    let (tx, rx) = mpsc::channel();
    let cfg = config.clone();
    let name = file.name.clone();
    let spawned = std::thread::Builder::new().stack_size(ANALYSIS_STACK).spawn(move || {
        let r = analyze_bytes(&file.name, &file.bytes, &cfg, &deadline);
        let _ = tx.send(r);
    });
    if let Err(e) = spawned {
        return FileOutcome { file: name, status: FileStatus::Failed { reason: format!("cannot start worker: {e}"), timed_out: false } };
    }
    // the analysis checks its own deadline; the grace period covers the
    // stretch between two checks
    let received = match config.timeout {
        Some(t) => rx.recv_timeout(t + (t / 4).max(Duration::from_millis(200))).map_err(|e| e.to_string()),
        None => rx.recv().map_err(|e| e.to_string()),
    };
    let status = match received {
        Ok(Ok(a)) => FileStatus::Analyzed(a),
        Ok(Err(crate::pipeline::FileError::TimedOut(e))) => FileStatus::Failed { reason: e.to_string(), timed_out: true },
        Ok(Err(e)) => FileStatus::Failed { reason: e.to_string(), timed_out: false },
        Err(_) => FileStatus::Failed { reason: "analysis exceeded its time budget".into(), timed_out: true },
    };
    FileOutcome { file: name, status }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub metrics: MetricsReport,
    /// Sorted by file name.
    pub files: Vec<FileOutcome>,
}

/// Analyze `files` concurrently and compute metrics against `labels`.
pub fn run_batch(files: Vec<SourceFile>, labels: Option<&[CorpusRecord]>, config: &BatchConfig) -> BatchResult {
    let (files, removed, unreadable) = if config.dedupe {
        let d = dedupe(files);
        (d.kept, d.removed, d.unreadable)
    } else {
        (files, Vec::new(), Vec::new())
    };
    let queue = Arc::new(Mutex::new(VecDeque::from(files)));
    let results = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..config.workers.max(1) {
            s.spawn(|| loop {
                let next = queue.lock().expect("queue").pop_front();
                let Some(f) = next else { break };
                let outcome = analyze_one(f, &config.analysis);
                results.lock().expect("results").push(outcome);
            });
        }
    });
    let mut outcomes = results.into_inner().expect("results");
    for (file, reason) in unreadable {
        outcomes.push(FileOutcome { file, status: FileStatus::Failed { reason, timed_out: false } });
    }
    outcomes.sort_by(|a, b| a.file.cmp(&b.file));
    let metrics = compute_metrics(&outcomes, labels, removed.len());
    BatchResult { metrics, files: outcomes }
}

pub fn compute_metrics(outcomes: &[FileOutcome], labels: Option<&[CorpusRecord]>, duplicate_count: usize) -> MetricsReport {
    let mut m = MetricsReport {
        analyzed_count: 0,
        failed_count: 0,
        duplicate_count,
        reported_count: 0,
        reported_contracts: 0,
        flagged_count: 0,
        tp_count: 0,
        suppressed_count: 0,
        precision: None,
        reported_rate: None,
        per_cause_counts: CauseType::ALL.into_iter().map(|c| (c, 0)).collect(),
        records: Vec::new(),
    };
    let by_key: BTreeMap<(&str, &str, &str), &CorpusRecord> =
        labels.unwrap_or_default().iter().map(|r| (r.key(), r)).collect();
    // (file, contract, function) -> (any likely TP, union of causes)
    let mut per_fn: BTreeMap<(String, String, String), (bool, BTreeSet<CauseType>)> = BTreeMap::new();
    for o in outcomes {
        let Some(a) = o.analysis() else {
            m.failed_count += 1;
            continue;
        };
        m.analyzed_count += 1;
        if !a.verdicts.is_empty() {
            m.reported_contracts += 1;
        }
        for v in &a.verdicts {
            m.reported_count += 1;
            let f = &v.finding;
            let key = (f.file.clone(), f.contract.clone(), f.function.clone());
            let entry = per_fn.entry(key).or_default();
            if v.is_suppressed() {
                m.suppressed_count += 1;
                for c in v.causes.keys() {
                    *m.per_cause_counts.entry(*c).or_default() += 1;
                }
                entry.1.extend(v.causes.keys().copied());
            } else {
                m.flagged_count += 1;
                entry.0 = true;
                if by_key.get(&(f.file.as_str(), f.contract.as_str(), f.function.as_str())).is_some_and(|r| r.label == Label::TP)
                {
                    m.tp_count += 1;
                }
            }
        }
    }
    if labels.is_some() && m.flagged_count > 0 {
        m.precision = Some(round6(m.tp_count as f64 / m.flagged_count as f64));
    }
    if m.analyzed_count > 0 {
        m.reported_rate = Some(round6(m.reported_contracts as f64 / m.analyzed_count as f64));
    }
    for r in labels.unwrap_or_default() {
        let got = per_fn.get(&(r.file.clone(), r.contract.clone(), r.function.clone()));
        let classification = got.map(|(tp, _)| {
            if *tp {
                Classification::LikelyTruePositive
            } else {
                Classification::SuppressedFalsePositive
            }
        });
        let causes: Vec<CauseType> = got.map(|(_, c)| c.iter().copied().collect()).unwrap_or_default();
        let agrees = match (r.label, classification) {
            (_, None) => false,
            (Label::TP, Some(c)) => c == Classification::LikelyTruePositive,
            (Label::FP, Some(c)) => {
                c == Classification::SuppressedFalsePositive && r.expected_cause.is_none_or(|e| causes.contains(&e))
            }
        };
        m.records.push(RecordOutcome {
            file: r.file.clone(),
            contract: r.contract.clone(),
            function: r.function.clone(),
            label: r.label,
            expected_cause: r.expected_cause,
            reported: got.is_some(),
            classification,
            causes,
            agrees,
        });
    }
    m.records.sort_by(|a, b| (&a.file, &a.contract, &a.function).cmp(&(&b.file, &b.contract, &b.function)));
    m
}
