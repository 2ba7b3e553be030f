#![allow(dead_code)]

pub mod mock_http;
pub mod mutants;
pub mod oracle;

use std::path::{Path, PathBuf};

use retriage::bench::{load_dir, read_labels_file, CorpusRecord, SourceFile};
use retriage::pipeline::{analyze_source, AnalysisConfig, FileAnalysis};
use retriage::triage::{CauseType, Verdict};

pub fn corpus_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn canonical_files() -> Vec<SourceFile> {
    load_dir(&corpus_dir("canonical")).expect("canonical corpus")
}

pub fn canonical_labels() -> Vec<CorpusRecord> {
    read_labels_file(&corpus_dir("canonical").join("labels.csv")).expect("canonical labels")
}

pub fn derived_files() -> Vec<SourceFile> {
    load_dir(&corpus_dir("derived")).expect("derived corpus")
}

pub fn derived_labels() -> Vec<CorpusRecord> {
    read_labels_file(&corpus_dir("derived").join("labels.csv")).expect("derived labels")
}

pub fn canonical_source(name: &str) -> String {
    std::fs::read_to_string(corpus_dir("canonical").join(name)).expect("canonical file")
}

pub fn analyze(name: &str, src: &str) -> FileAnalysis {
    analyze_with(name, src, &AnalysisConfig::default())
}

pub fn analyze_with(name: &str, src: &str, config: &AnalysisConfig) -> FileAnalysis {
    analyze_source(name, src, config).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn verdicts_of<'a>(a: &'a FileAnalysis, function: &str) -> Vec<&'a Verdict> {
    a.verdicts.iter().filter(|v| v.finding.function == function).collect()
}

/// The cause each reference file is designed to exhibit, with the function
/// holding the call. `None` marks the true positive.
pub const DESIGNATED: [(&str, &str, Option<CauseType>); 8] = [
    ("simple_dao.sol", "withdraw", None),
    ("owner_only_call.sol", "execute", Some(CauseType::IdentityControl)),
    ("hardcoded_token.sol", "register", Some(CauseType::AddressControl)),
    ("vesting_lock.sol", "withdraw", Some(CauseType::ReentrancyLock)),
    ("token_balance_query.sol", "getTokenBal", Some(CauseType::NoStateChange)),
    ("token_deposit.sol", "depositToken", Some(CauseType::NoFinancialRisk)),
    ("eth_dai_trade.sol", "tradeEthVsDAI", Some(CauseType::SpecialTransferValue)),
    ("internal_transfer.sol", "_withdraw", Some(CauseType::GasStipendTransferSend)),
];

/// Deeply nested functions whose innermost block holds `width` guarded
/// calls in sequence. Flow queries per call scale with the block count, so
/// the total cost grows with `width` cubed.
pub fn pathological_source(functions: usize, depth: usize, width: usize) -> String {
    let mut s = String::from("contract Slow {\n    mapping(address => uint) bal;\n    uint total;\n");
    for i in 0..functions {
        s.push_str(&format!("    function f{i}(address a, uint v) public {{\n"));
        for d in 0..depth {
            s.push_str(&format!("        if (v > {d}) {{\n"));
        }
        for k in 0..width {
            s.push_str(&format!("        if (bal[a] > {k}) {{ a.call.value(v)(\"\"); total += {k}; }}\n"));
        }
        for _ in 0..depth {
            s.push_str("        }\n");
        }
        s.push_str("    }\n");
    }
    s.push_str("}\n");
    s
}
