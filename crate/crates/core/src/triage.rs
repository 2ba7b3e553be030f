//! False-positive triage: eight independent rules, each either matching a
//! finding with evidence or not.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::detector::Finding;
use crate::flow::facts::{atoms_after, every_path_passes, is_zero, write_follows_call};
use crate::flow::provenance::see_through;
use crate::flow::{guards_of, value_provenance, ContractFacts, FunctionFacts, GuardSource, Provenance, WriteKind};
use crate::frontend::ast::*;
use crate::frontend::render::expr_text;
use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CauseType {
    IdentityControl,
    AddressControl,
    ReentrancyLock,
    NoStateChange,
    NoFinancialRisk,
    SpecialTransferValue,
    GasStipendTransferSend,
    NonCallable,
}

impl CauseType {
    pub const ALL: [CauseType; 8] = [
        CauseType::IdentityControl,
        CauseType::AddressControl,
        CauseType::ReentrancyLock,
        CauseType::NoStateChange,
        CauseType::NoFinancialRisk,
        CauseType::SpecialTransferValue,
        CauseType::GasStipendTransferSend,
        CauseType::NonCallable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CauseType::IdentityControl => "identity_control",
            CauseType::AddressControl => "address_control",
            CauseType::ReentrancyLock => "reentrancy_lock",
            CauseType::NoStateChange => "no_state_change",
            CauseType::NoFinancialRisk => "no_financial_risk",
            CauseType::SpecialTransferValue => "special_transfer_value",
            CauseType::GasStipendTransferSend => "gas_stipend_transfer_send",
            CauseType::NonCallable => "non_callable",
        }
    }

    pub fn all() -> BTreeSet<CauseType> {
        CauseType::ALL.into_iter().collect()
    }

    /// Parse a comma-separated list. The empty string is the empty set.
    pub fn parse_list(s: &str) -> Result<BTreeSet<CauseType>, UnknownCause> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for CauseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown rule `{0}`")]
pub struct UnknownCause(pub String);

impl FromStr for CauseType {
    type Err = UnknownCause;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CauseType::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| UnknownCause(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Evidence {
    pub span: Span,
    pub text: String,
}

impl Evidence {
    fn of_expr(e: &Expr) -> Self {
        Evidence { span: e.span, text: expr_text(e) }
    }

    fn new(span: Span, text: impl Into<String>) -> Self {
        Evidence { span, text: text.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LikelyTruePositive,
    SuppressedFalsePositive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::LikelyTruePositive => "likely_true_positive",
            Classification::SuppressedFalsePositive => "suppressed_false_positive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleOutcome {
    pub rule: CauseType,
    pub matched: bool,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub finding: Finding,
    pub causes: BTreeMap<CauseType, Vec<Evidence>>,
    pub classification: Classification,
    /// One entry per enabled rule, in rule order.
    pub rule_trace: Vec<RuleOutcome>,
}

impl Verdict {
    pub fn is_suppressed(&self) -> bool {
        self.classification == Classification::SuppressedFalsePositive
    }
}

/// What a rule sees: the finding plus the facts of its contract and
/// enclosing function.
pub struct RuleInput<'a> {
    pub finding: &'a Finding,
    pub contract: &'a ContractFacts,
    pub function: &'a FunctionFacts,
}

impl<'a> RuleInput<'a> {
    pub fn new(finding: &'a Finding, facts: &'a [ContractFacts]) -> Self {
        let contract = &facts[finding.contract_index];
        RuleInput { finding, contract, function: &contract.functions[finding.function_index] }
    }

    /// A name that refers to a state variable here, not a shadowing local.
    fn state_var(&self, name: &str) -> Option<&'a StateVarDef> {
        if self.function.scope.locals.contains_key(name) {
            return None;
        }
        self.contract.flat.state_var(name)
    }
}

pub fn evaluate(rule: CauseType, input: &RuleInput) -> Option<Vec<Evidence>> {
    let ev = match rule {
        CauseType::IdentityControl => identity_control(input),
        CauseType::AddressControl => address_control(input),
        CauseType::ReentrancyLock => reentrancy_lock(input),
        CauseType::NoStateChange => no_state_change(input),
        CauseType::NoFinancialRisk => no_financial_risk(input),
        CauseType::SpecialTransferValue => special_transfer_value(input),
        CauseType::GasStipendTransferSend => gas_stipend(input),
        CauseType::NonCallable => non_callable(input),
    }?;
    // a match must always point at something
    (!ev.is_empty()).then_some(ev)
}

/// Run every enabled rule and classify.
pub fn triage(finding: &Finding, facts: &[ContractFacts], enabled: &BTreeSet<CauseType>) -> Verdict {
    let input = RuleInput::new(finding, facts);
    let mut causes = BTreeMap::new();
    let mut rule_trace = Vec::new();
    for &rule in enabled {
        match evaluate(rule, &input) {
            Some(ev) => {
                causes.insert(rule, ev.clone());
                rule_trace.push(RuleOutcome { rule, matched: true, evidence: ev });
            }
            None => rule_trace.push(RuleOutcome { rule, matched: false, evidence: Vec::new() }),
        }
    }
    let classification =
        if causes.is_empty() { Classification::LikelyTruePositive } else { Classification::SuppressedFalsePositive };
    Verdict { finding: finding.clone(), causes, classification, rule_trace }
}

fn is_sender(e: &Expr) -> bool {
    matches!(see_through(e).kind, ExprKind::MsgSender)
}

fn identity_control(input: &RuleInput) -> Option<Vec<Evidence>> {
    let ff = input.function;
    let mut ev = Vec::new();
    for g in guards_of(&ff.cfg, input.finding.call_site.pos) {
        let (lit, positive) = g.literal();
        let hit = match &lit.kind {
            ExprKind::Binary { op, lhs, rhs }
                if (*op == BinOp::Eq && positive) || (*op == BinOp::Ne && !positive) =>
            {
                let other = if is_sender(lhs) {
                    rhs
                } else if is_sender(rhs) {
                    lhs
                } else {
                    continue;
                };
                see_through(other)
                    .as_ident()
                    .and_then(|n| input.state_var(n))
                    .is_some_and(|v| types::is_address(&v.type_name))
            }
            ExprKind::Index { base, index: Some(idx) } if positive && g.source == GuardSource::Require => {
                is_sender(idx)
                    && base
                        .as_ident()
                        .and_then(|n| input.state_var(n))
                        .and_then(|v| types::mapping_parts(&v.type_name))
                        .is_some_and(|(k, v)| types::is_address(&k) && types::is_bool(&v))
            }
            _ => false,
        };
        if hit {
            ev.push(Evidence::new(g.span, expr_text(&g.expr)));
        }
    }
    (!ev.is_empty()).then_some(ev)
}

fn address_control(input: &RuleInput) -> Option<Vec<Evidence>> {
    let site = &input.finding.call_site;
    let p = value_provenance(&site.target_expr, input.contract, Some((input.function, site.pos)));
    if !matches!(p, Provenance::HardcodedConstant | Provenance::StateVarFixed) {
        return None;
    }
    let mut ev = vec![Evidence::new(site.target_expr.span, format!("{} ({})", expr_text(&site.target_expr), p.as_str()))];
    if let Some(v) = see_through(&site.target_expr).as_ident().and_then(|n| input.state_var(n)) {
        ev.push(Evidence::new(v.span, format!("state variable {}", v.name)));
    }
    Some(ev)
}

fn assigns_literal(a: &crate::flow::cfg::Atom, var: &str, value: &str) -> bool {
    a.writes.iter().any(|w| w.target == var && w.kind == WriteKind::DirectAssign && w.value.as_deref() == Some(value))
}

fn reentrancy_lock(input: &RuleInput) -> Option<Vec<Evidence>> {
    let ff = input.function;
    let site = &input.finding.call_site;
    for g in guards_of(&ff.cfg, site.pos) {
        if g.source != GuardSource::Require {
            continue;
        }
        let (lit, positive) = g.literal();
        let Some(flag) = lit.as_ident() else { continue };
        if !input.state_var(flag).is_some_and(|v| types::is_bool(&v.type_name)) {
            continue;
        }
        // require(flag) means true is unlocked; require(!flag) the reverse
        let (locked, unlocked) = if positive { ("false", "true") } else { ("true", "false") };
        let sets_lock = |a: &crate::flow::cfg::Atom| assigns_literal(a, flag, locked);
        if !every_path_passes(&ff.cfg, g.at, site.pos, &sets_lock) {
            continue;
        }
        let restores: Vec<_> = input
            .finding
            .post_writes
            .iter()
            .filter(|w| w.target == flag && w.kind == WriteKind::DirectAssign && w.value.as_deref() == Some(unlocked))
            .collect();
        if restores.is_empty() {
            continue;
        }
        let mut ev = vec![Evidence::new(g.span, expr_text(&g.expr))];
        for b in &ff.cfg.blocks {
            for a in &b.atoms {
                for w in &a.writes {
                    if w.target == flag && w.value.as_deref() == Some(locked) && a.span.start < site.location.start {
                        ev.push(Evidence::new(w.location, format!("{flag} = {locked}")));
                    }
                }
            }
        }
        ev.extend(restores.iter().map(|w| Evidence::new(w.location, format!("{flag} = {unlocked}"))));
        return Some(ev);
    }
    None
}

/// Ether-sending call sites that may run after the finding's call.
fn ether_sent_after(input: &RuleInput) -> bool {
    let ff = input.function;
    let pos = input.finding.call_site.pos;
    let later: BTreeSet<_> = atoms_after(&ff.cfg, pos).into_iter().collect();
    ff.sites.iter().any(|s| {
        s.sends_ether()
            && (later.contains(&(s.pos.block, s.pos.atom))
                || (s.pos == pos && write_follows_call(&s.location, &input.finding.location)))
    })
}

fn no_state_change(input: &RuleInput) -> Option<Vec<Evidence>> {
    let f = input.finding;
    if !f.post_writes.is_empty() || f.call_site.value_slot.as_ref().is_some_and(|v| !is_zero(v)) || ether_sent_after(input)
    {
        return None;
    }
    Some(vec![Evidence::new(f.location, format!("{} (no state written after)", expr_text_of_call(f)))])
}

fn expr_text_of_call(f: &Finding) -> String {
    let site = &f.call_site;
    match site.call.member_name() {
        Some(m) => format!("{}.{}", expr_text(&site.target_expr), m),
        None => expr_text(&site.target_expr),
    }
}

/// `x.transferFrom(msg.sender, this, ...)`: tokens move into this contract.
fn inbound_transfer(call: &Call) -> bool {
    call.member_name() == Some("transferFrom")
        && call.args.positional().is_some_and(|a| {
            a.len() >= 2 && is_sender(&a[0]) && matches!(see_through(&a[1]).kind, ExprKind::This)
        })
}

fn no_financial_risk(input: &RuleInput) -> Option<Vec<Evidence>> {
    let f = input.finding;
    if f.post_writes.is_empty() || f.post_writes.iter().any(|w| w.is_opaque()) {
        return None;
    }
    let site = &f.call_site;
    let empty_value = site.value_slot.as_ref().is_none_or(is_zero);
    let shape = if inbound_transfer(&site.call) {
        "inbound transferFrom(msg.sender, this, ...)"
    } else if empty_value && !input.function.sites.iter().any(|s| s.sends_ether()) {
        "no ether attached and none sent by the function"
    } else {
        return None;
    };
    let written: BTreeSet<&str> = f.post_writes.iter().map(|w| w.target.as_str()).collect();
    let mut ev = vec![Evidence::new(f.location, format!("{}: {shape}", expr_text_of_call(f)))];
    for og in &input.contract.outflow_guards {
        if og.reads.iter().any(|r| written.contains(r.as_str())) {
            return None;
        }
        let g = &og.guard;
        ev.push(Evidence::new(g.span, format!("outflow guard {} is independent", expr_text(&g.expr))));
    }
    ev.sort();
    ev.dedup();
    Some(ev)
}

fn special_transfer_value(input: &RuleInput) -> Option<Vec<Evidence>> {
    let site = &input.finding.call_site;
    let v = site.value_slot.as_ref()?;
    if value_provenance(v, input.contract, Some((input.function, site.pos))) != Provenance::MsgValue {
        return None;
    }
    let mut ev = vec![Evidence::of_expr(v)];
    if !matches!(see_through(v).kind, ExprKind::MsgValue) {
        for g in guards_of(&input.function.cfg, site.pos) {
            if g.source == GuardSource::Require && expr_text(&g.expr).contains("msg . value") {
                ev.push(Evidence::new(g.span, expr_text(&g.expr)));
            }
        }
    }
    Some(ev)
}

fn gas_stipend(input: &RuleInput) -> Option<Vec<Evidence>> {
    let site = &input.finding.call_site;
    if !matches!(site.call_kind, CallKind::Transfer | CallKind::Send) || site.gas.is_some() {
        return None;
    }
    Some(vec![Evidence::new(site.location, format!("{} forwards a 2300 gas stipend", expr_text_of_call(input.finding)))])
}

fn non_callable(input: &RuleInput) -> Option<Vec<Evidence>> {
    let f = &input.contract.flat.functions[input.finding.function_index];
    if f.is_constructor {
        return Some(vec![Evidence::new(f.span, "constructor")]);
    }
    if !f.callable_externally {
        return Some(vec![Evidence::new(f.span, format!("{} is not reachable from a public or external function", f.display_name()))]);
    }
    None
}
