//! Baseline reentrancy candidates: every external call site, flagged as a
//! check-effects-interaction violation when state is written after it.

use std::collections::BTreeSet;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::budget::{Deadline, TimedOut};
use crate::flow::{writes_after, CallSite, ContractFacts, StateWrite};
use crate::frontend::ast::{CallKind, ContractKind};
use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorVariant {
    CeiViolation,
    BareExternalCall,
}

impl DetectorVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorVariant::CeiViolation => "cei_violation",
            DetectorVariant::BareExternalCall => "bare_external_call",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorConfig {
    pub call_kinds: BTreeSet<CallKind>,
    pub report_bare: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { call_kinds: CallKind::EXTERNAL.into_iter().collect(), report_bare: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub id: String,
    pub file: String,
    pub contract: String,
    pub function: String,
    /// Index of the contract in the file's facts.
    pub contract_index: usize,
    /// Index of the function within the contract.
    pub function_index: usize,
    pub call_site: CallSite,
    pub post_writes: Vec<StateWrite>,
    pub variant: DetectorVariant,
    pub location: Span,
}

pub fn finding_id(file: &str, contract: &str, function: &str, location: Span) -> String {
    let mut h = Sha256::new();
    h.update(format!("{file}|{contract}|{function}|{}:{}:{}-{}", location.line, location.column, location.start, location.end));
    hex::encode(&h.finalize()[..16])
}

/// Contracts worth reporting on: concrete contracts and libraries that no
/// other contract in the file inherits from. Inherited code is reported
/// through the inheriting contract.
pub fn leaf_contracts(facts: &[ContractFacts]) -> Vec<bool> {
    facts
        .iter()
        .map(|c| {
            c.flat.kind != ContractKind::Interface
                && !facts.iter().any(|o| o.flat.name != c.flat.name && o.flat.linearization.contains(&c.flat.name))
        })
        .collect()
}

pub fn detect(file: &str, facts: &[ContractFacts], config: &DetectorConfig, deadline: &Deadline) -> Result<Vec<Finding>, TimedOut> {
    let leaves = leaf_contracts(facts);
    let mut out = Vec::new();
    for (ci, cf) in facts.iter().enumerate() {
        if !leaves[ci] {
            continue;
        }
        for ff in &cf.functions {
            for site in &ff.sites {
                deadline.check()?;
                if !config.call_kinds.contains(&site.call_kind) {
                    continue;
                }
                let post_writes = writes_after(&ff.cfg, site.pos, site.location);
                let variant = if !post_writes.is_empty() {
                    DetectorVariant::CeiViolation
                } else if config.report_bare {
                    DetectorVariant::BareExternalCall
                } else {
                    continue;
                };
                let function = cf.flat.functions[ff.index].display_name().to_string();
                out.push(Finding {
                    id: finding_id(file, &cf.flat.name, &function, site.location),
                    file: file.to_string(),
                    contract: cf.flat.name.clone(),
                    function,
                    contract_index: ci,
                    function_index: ff.index,
                    call_site: site.clone(),
                    post_writes,
                    variant,
                    location: site.location,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        (&a.file, a.location.line, a.location.start, &a.contract, &a.function).cmp(&(
            &b.file,
            b.location.line,
            b.location.start,
            &b.contract,
            &b.function,
        ))
    });
    Ok(out)
}
