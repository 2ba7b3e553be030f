//! Where a value comes from: literals, fixed or mutable state, `msg.value`,
//! parameters, or something computed.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::frontend::ast::*;

use super::facts::{guards_of, SitePos};
use super::{ContractFacts, FunctionFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    HardcodedConstant,
    StateVarFixed,
    StateVarMutable,
    MsgValue,
    Parameter,
    Computed,
    Unknown,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::HardcodedConstant => "hardcoded_constant",
            Provenance::StateVarFixed => "state_var_fixed",
            Provenance::StateVarMutable => "state_var_mutable",
            Provenance::MsgValue => "msg_value",
            Provenance::Parameter => "parameter",
            Provenance::Computed => "computed",
            Provenance::Unknown => "unknown",
        }
    }
}

const MAX_CHAIN: usize = 8;

/// Provenance of `expr` as evaluated in function `f` at `at` (the position
/// matters only for the require-equal-to-`msg.value` case).
pub fn value_provenance(expr: &Expr, facts: &ContractFacts, f: Option<(&FunctionFacts, SitePos)>) -> Provenance {
    provenance_inner(expr, facts, f, 0)
}

fn provenance_inner(expr: &Expr, facts: &ContractFacts, f: Option<(&FunctionFacts, SitePos)>, depth: usize) -> Provenance {
    if depth > MAX_CHAIN {
        return Provenance::Unknown;
    }
    let e = see_through(expr);
    match &e.kind {
        ExprKind::Literal(_) => Provenance::HardcodedConstant,
        ExprKind::MsgValue => Provenance::MsgValue,
        ExprKind::Ident(name) => {
            if let Some((ff, pos)) = f {
                if equals_msg_value_on_all_paths(ff, pos, e) {
                    return Provenance::MsgValue;
                }
                if let Some(local) = ff.scope.locals.get(name) {
                    if local.is_param {
                        return Provenance::Parameter;
                    }
                    return match ff.single_definition(name) {
                        Some(init) => provenance_inner(init, facts, f, depth + 1),
                        None => Provenance::Computed,
                    };
                }
            }
            if facts.flat.state_var(name).is_some() {
                if facts.fixed_vars.contains(name) {
                    Provenance::StateVarFixed
                } else {
                    Provenance::StateVarMutable
                }
            } else {
                Provenance::Unknown
            }
        }
        ExprKind::MsgSender | ExprKind::This => Provenance::Unknown,
        _ => Provenance::Computed,
    }
}

/// Parentheses and type conversions do not change where a value comes from.
pub fn see_through(e: &Expr) -> &Expr {
    let p = e.peeled();
    match &p.kind {
        ExprKind::TypeCast { arg, .. } => see_through(arg),
        _ => p,
    }
}

fn equals_msg_value_on_all_paths(ff: &FunctionFacts, pos: SitePos, e: &Expr) -> bool {
    guards_of(&ff.cfg, pos).iter().any(|g| {
        let (lit, positive) = g.literal();
        let ExprKind::Binary { op, lhs, rhs } = &lit.kind else { return false };
        let is_eq = (*op == BinOp::Eq && positive) || (*op == BinOp::Ne && !positive);
        let (l, r) = (see_through(lhs), see_through(rhs));
        is_eq
            && ((matches!(l.kind, ExprKind::MsgValue) && r.same_shape(e))
                || (matches!(r.kind, ExprKind::MsgValue) && l.same_shape(e)))
    })
}

/// True for literals and references to already-fixed state.
fn fixed_source(e: &Expr, fixed: &BTreeSet<String>) -> bool {
    match &see_through(e).kind {
        ExprKind::Literal(_) => true,
        ExprKind::Ident(n) => fixed.contains(n),
        _ => false,
    }
}

/// State variables whose value cannot change after deployment: constants,
/// immutables, and variables initialized at declaration or in the
/// constructor from literals or other fixed state, and written nowhere else.
pub(super) fn fixed_state_vars(facts: &ContractFacts) -> BTreeSet<String> {
    let flat = &facts.flat;
    let mut written_elsewhere: BTreeSet<String> = BTreeSet::new();
    let mut opaque_elsewhere = false;
    for ff in &facts.functions {
        if flat.functions[ff.index].is_constructor {
            continue;
        }
        written_elsewhere.extend(ff.written.iter().cloned());
        opaque_elsewhere |= ff.has_opaque;
    }
    let ctor = facts.functions.iter().find(|ff| flat.functions[ff.index].is_constructor);

    let mut fixed: BTreeSet<String> = BTreeSet::new();
    let names: BTreeSet<&str> = flat.state_vars.iter().map(|v| v.def.name.as_str()).collect();
    for n in &names {
        if flat.state_var(n).is_some_and(|v| v.is_constant_or_immutable) {
            fixed.insert(n.to_string());
        }
    }
    if opaque_elsewhere {
        return fixed;
    }
    loop {
        let mut changed = false;
        for n in &names {
            if fixed.contains(*n) || written_elsewhere.contains(*n) {
                continue;
            }
            let Some(def) = flat.state_var(n) else { continue };
            let mut defs: Vec<&Expr> = def.initializer.iter().collect();
            let ctor_defs = match ctor {
                Some(c) => match c.plain_assignments_to(n) {
                    Some(v) => v,
                    None => continue,
                },
                None => Vec::new(),
            };
            defs.extend(ctor_defs);
            if !defs.is_empty() && defs.iter().all(|e| fixed_source(e, &fixed)) {
                fixed.insert(n.to_string());
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    fixed
}
