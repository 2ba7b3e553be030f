//! Per-function facts queried by the detector and the triage rules: state
//! writes, external call sites, writes after a call and dominating guards.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::ast::*;
use crate::frontend::render::expr_text;
use crate::span::Span;

use super::cfg::{Atom, AtomKind, BlockId, Cfg, EdgeKind};

/// Target name used for writes by opaque statements.
pub const OPAQUE_TARGET: &str = "<opaque>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WriteKind {
    DirectAssign,
    CompoundAssign,
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StateWrite {
    /// State variable name, or [`OPAQUE_TARGET`].
    pub target: String,
    /// Rendered index expression(s) for mapping/array element writes.
    pub index: Option<String>,
    pub location: Span,
    pub kind: WriteKind,
    /// The written value for plain assignments, rendered.
    #[serde(skip)]
    pub value: Option<String>,
}

impl StateWrite {
    pub fn is_opaque(&self) -> bool {
        self.kind == WriteKind::Opaque
    }

    pub fn display(&self) -> String {
        match &self.index {
            Some(i) => format!("{}[{}]", self.target, i),
            None => self.target.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalInfo {
    pub type_name: String,
    pub is_param: bool,
    /// State variable a `storage` local points into.
    pub storage_alias: Option<String>,
}

/// Names visible in one function: state variables and locals/params.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WriteScope {
    pub state_vars: BTreeSet<String>,
    pub locals: BTreeMap<String, LocalInfo>,
}

impl WriteScope {
    pub fn new(state_vars: impl IntoIterator<Item = String>, params: &[Param], body: &Block) -> Self {
        let state_vars: BTreeSet<String> = state_vars.into_iter().collect();
        let mut locals = BTreeMap::new();
        for p in params {
            if let Some(n) = &p.name {
                locals.insert(n.clone(), LocalInfo { type_name: p.type_name.clone(), is_param: true, storage_alias: None });
            }
        }
        let mut scope = WriteScope { state_vars, locals };
        body.walk(&mut |s| {
            if let StmtKind::LocalDecl { vars, init, tuple } = &s.kind {
                for v in vars.iter().flatten() {
                    let alias = match (v.location.as_deref(), init, tuple) {
                        (Some("storage"), Some(e), false) => scope.state_root(e),
                        _ => None,
                    };
                    scope.locals.insert(
                        v.name.clone(),
                        LocalInfo { type_name: v.type_name.clone(), is_param: false, storage_alias: alias },
                    );
                }
            }
        });
        scope
    }

    /// Adds named return values as locals.
    pub fn with_returns(mut self, returns: &[Param]) -> Self {
        for p in returns {
            if let Some(n) = &p.name {
                self.locals.insert(n.clone(), LocalInfo { type_name: p.type_name.clone(), is_param: false, storage_alias: None });
            }
        }
        self
    }

    /// State variable written when assigning to `target`, if any. Names that
    /// are neither local nor known state are assumed to be inherited state.
    pub fn state_root(&self, target: &Expr) -> Option<String> {
        let root = target.root_ident()?;
        match self.locals.get(root) {
            Some(l) => l.storage_alias.clone(),
            None if matches!(root, "this" | "msg" | "block" | "tx" | "abi" | "super") => None,
            None => Some(root.to_string()),
        }
    }

    pub fn is_state_var(&self, name: &str) -> bool {
        !self.locals.contains_key(name) && self.state_vars.contains(name)
    }

    fn lvalue_writes(&self, target: &Expr, kind: WriteKind, span: Span, value: Option<&Expr>, out: &mut Vec<StateWrite>) {
        if let ExprKind::Tuple(items) = &target.peeled().kind {
            for t in items.iter().flatten() {
                self.lvalue_writes(t, kind, span, None, out);
            }
            return;
        }
        let Some(var) = self.state_root(target) else { return };
        out.push(StateWrite { target: var, index: index_text(target), location: span, kind, value: value.map(expr_text) });
    }

    fn expr_writes(&self, e: &Expr, out: &mut Vec<StateWrite>) {
        e.walk(&mut |x| match &x.kind {
            ExprKind::Assign { target, op, value } => {
                let kind = if op.is_compound() { WriteKind::CompoundAssign } else { WriteKind::DirectAssign };
                let value = (!op.is_compound()).then_some(&**value);
                self.lvalue_writes(target, kind, x.span, value, out);
            }
            ExprKind::Unary { op, operand, .. } if op.writes_operand() => {
                let kind = if *op == UnOp::Delete { WriteKind::DirectAssign } else { WriteKind::CompoundAssign };
                self.lvalue_writes(operand, kind, x.span, None, out);
            }
            _ => {}
        });
    }

    /// State writes performed by one atom, in source order.
    pub fn atom_writes(&self, atom: &Atom) -> Vec<StateWrite> {
        let mut out = Vec::new();
        match &atom.kind {
            AtomKind::Stmt(s) => match &s.kind {
                StmtKind::Opaque { .. } => out.push(StateWrite {
                    target: OPAQUE_TARGET.into(),
                    index: None,
                    location: s.span,
                    kind: WriteKind::Opaque,
                    value: None,
                }),
                StmtKind::Assign { target, op, value } => {
                    self.expr_writes(target, &mut out);
                    self.expr_writes(value, &mut out);
                    let kind = if op.is_compound() { WriteKind::CompoundAssign } else { WriteKind::DirectAssign };
                    let value = (!op.is_compound()).then_some(value);
                    self.lvalue_writes(target, kind, s.span, value, &mut out);
                }
                _ => {
                    for e in s.own_exprs() {
                        self.expr_writes(e, &mut out);
                    }
                }
            },
            AtomKind::Cond(e) => self.expr_writes(e, &mut out),
        }
        out.sort_by_key(|w| (w.location.end, w.location.start));
        out
    }
}

fn index_text(target: &Expr) -> Option<String> {
    let mut parts = Vec::new();
    let mut cur = target.peeled();
    loop {
        match &cur.kind {
            ExprKind::Index { base, index } => {
                parts.push(index.as_deref().map(expr_text).unwrap_or_default());
                cur = base.peeled();
            }
            ExprKind::Member { base, .. } => cur = base.peeled(),
            _ => break,
        }
    }
    if parts.is_empty() {
        return None;
    }
    parts.reverse();
    Some(parts.join("]["))
}

pub fn annotate_writes(cfg: &mut Cfg, scope: &WriteScope) {
    for b in &mut cfg.blocks {
        for a in &mut b.atoms {
            a.writes = scope.atom_writes(a);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SitePos {
    pub block: BlockId,
    pub atom: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallSite {
    pub call_kind: CallKind,
    /// Receiver for member calls, callee otherwise.
    pub target_expr: Expr,
    pub value_slot: Option<Expr>,
    pub gas: Option<Expr>,
    pub call: Call,
    pub location: Span,
    pub enclosing_function: String,
    pub pos: SitePos,
}

impl CallSite {
    pub fn sends_ether(&self) -> bool {
        matches!(self.call_kind, CallKind::LowLevelCall | CallKind::Transfer | CallKind::Send)
            && self.value_slot.as_ref().is_some_and(|v| !is_zero(v))
    }
}

pub fn is_zero(e: &Expr) -> bool {
    match &e.peeled().kind {
        ExprKind::Literal(l) => l.is_zero(),
        ExprKind::TypeCast { arg, .. } => is_zero(arg),
        _ => false,
    }
}

/// External call sites of a CFG, in block/atom/source order.
pub fn call_sites(cfg: &Cfg, function: &str) -> Vec<CallSite> {
    let mut out = Vec::new();
    for (b, block) in cfg.blocks.iter().enumerate() {
        for (i, atom) in block.atoms.iter().enumerate() {
            let mut here = Vec::new();
            for e in atom.exprs() {
                e.walk(&mut |x| {
                    if let ExprKind::Call(call) = &x.kind {
                        if call.kind.is_external() {
                            here.push(CallSite {
                                call_kind: call.kind,
                                target_expr: call.receiver().unwrap_or(&call.callee).clone(),
                                value_slot: call.value_slot().cloned(),
                                gas: call.gas_option().cloned(),
                                call: call.clone(),
                                location: x.span,
                                enclosing_function: function.to_string(),
                                pos: SitePos { block: b, atom: i },
                            });
                        }
                    }
                });
            }
            here.sort_by_key(|s| (s.location.end, s.location.start));
            out.extend(here);
        }
    }
    out
}

/// Whether a write in the same atom as a call happens after the call
/// returns: it is not part of the call's own arguments and completes later.
pub fn write_follows_call(write: &Span, call: &Span) -> bool {
    !call.contains(write) && write.end >= call.end
}

/// Atoms that can execute after atom `pos` finishes, in (block, atom)
/// order. Includes the whole site block when a loop leads back to it.
pub fn atoms_after(cfg: &Cfg, pos: SitePos) -> Vec<(BlockId, usize)> {
    let succs: Vec<BlockId> = cfg.successors(pos.block).collect();
    let reach = cfg.reachable_from(&succs, None, None);
    let mut out = Vec::new();
    for (b, block) in cfg.blocks.iter().enumerate() {
        for i in 0..block.atoms.len() {
            if reach[b] || (b == pos.block && i > pos.atom) {
                out.push((b, i));
            }
        }
    }
    out
}

/// State writes on any path strictly after the call site, with loops
/// unrolled once. Sorted by location, duplicates removed.
pub fn writes_after(cfg: &Cfg, pos: SitePos, call_span: Span) -> Vec<StateWrite> {
    let atom = &cfg.blocks[pos.block].atoms[pos.atom];
    let mut set: BTreeSet<StateWrite> =
        atom.writes.iter().filter(|w| write_follows_call(&w.location, &call_span)).cloned().collect();
    for (b, i) in atoms_after(cfg, pos) {
        set.extend(cfg.blocks[b].atoms[i].writes.iter().cloned());
    }
    let mut v: Vec<StateWrite> = set.into_iter().collect();
    v.sort_by_key(|w| (w.location, w.target.clone()));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardSource {
    Require,
    Branch,
}

/// A condition known to hold at a program point. `negated` means the
/// condition expression is known to be false (the else arm of a branch).
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub expr: Expr,
    pub negated: bool,
    pub source: GuardSource,
    /// Span of the require statement or branch condition.
    pub span: Span,
    /// Position of the require atom, or of the branch condition atom.
    pub at: SitePos,
}

impl Guard {
    /// The guard as a plain expression plus polarity, with `!` peeled.
    pub fn literal(&self) -> (&Expr, bool) {
        let mut e = self.expr.peeled();
        let mut positive = !self.negated;
        while let ExprKind::Unary { op: UnOp::Not, operand, .. } = &e.kind {
            e = operand.peeled();
            positive = !positive;
        }
        (e, positive)
    }
}

/// Split a condition into facts: `a && b` holds gives two facts, and so
/// does `a || b` failing.
fn split_facts(e: &Expr, negated: bool, out: &mut Vec<(Expr, bool)>) {
    let p = e.peeled();
    match &p.kind {
        ExprKind::Binary { op: BinOp::And, lhs, rhs } if !negated => {
            split_facts(lhs, false, out);
            split_facts(rhs, false, out);
        }
        ExprKind::Binary { op: BinOp::Or, lhs, rhs } if negated => {
            split_facts(lhs, true, out);
            split_facts(rhs, true, out);
        }
        ExprKind::Unary { op: UnOp::Not, operand, .. } => split_facts(operand, !negated, out),
        _ => out.push((p.clone(), negated)),
    }
}

/// Conditions of every require and branch that dominates the atom at `pos`.
pub fn guards_of(cfg: &Cfg, pos: SitePos) -> Vec<Guard> {
    let idom = cfg.immediate_dominators();
    if idom[pos.block].is_none() {
        return Vec::new();
    }
    // dominators of the site block, innermost first
    let mut chain = vec![pos.block];
    while let Some(&b) = chain.last().filter(|&&b| b != cfg.entry) {
        chain.push(idom[b].expect("live block"));
    }
    let mut out = Vec::new();
    for &b in &chain {
        for (i, atom) in cfg.blocks[b].atoms.iter().enumerate() {
            if b == pos.block && i >= pos.atom {
                break;
            }
            let Some(s) = atom.stmt() else { continue };
            let StmtKind::Require { cond, .. } = &s.kind else { continue };
            let mut facts = Vec::new();
            split_facts(cond, false, &mut facts);
            for (expr, negated) in facts {
                out.push(Guard { expr, negated, source: GuardSource::Require, span: s.span, at: SitePos { block: b, atom: i } });
            }
        }
        // an edge dominates the site when its head does and it is the only
        // way into the head from outside the head's dominance region
        if b == cfg.entry {
            continue;
        }
        let live_in: Vec<usize> = cfg.in_edges(b).iter().copied().filter(|&j| idom[cfg.edges[j].from].is_some()).collect();
        let outside: Vec<usize> = live_in.into_iter().filter(|&j| !cfg.dominates(b, cfg.edges[j].from)).collect();
        let [idx] = outside[..] else { continue };
        let e = cfg.edges[idx];
        let Some(cond) = cfg.blocks[e.from].atoms.last().and_then(|a| a.cond()) else { continue };
        let negated = match e.kind {
            EdgeKind::True => false,
            EdgeKind::False | EdgeKind::Seq => true,
            EdgeKind::LoopBack => continue,
        };
        let mut facts = Vec::new();
        split_facts(cond, negated, &mut facts);
        let at = SitePos { block: e.from, atom: cfg.blocks[e.from].atoms.len() - 1 };
        for (expr, negated) in facts {
            out.push(Guard { expr, negated, source: GuardSource::Branch, span: cond.span, at });
        }
    }
    out.sort_by_key(|g| (g.span, g.negated));
    out
}

/// True if every path from just after atom `from` to atom `to` passes an
/// atom satisfying `blocks` (strictly between the two).
pub fn every_path_passes(cfg: &Cfg, from: SitePos, to: SitePos, blocks: &dyn Fn(&Atom) -> bool) -> bool {
    // scan the rest of a block starting at atom `start`; returns Some(true)
    // when `to` is hit first, Some(false) when a blocking atom is hit first,
    // None when the block is exhausted.
    let scan = |b: BlockId, start: usize| -> Option<bool> {
        let atoms = &cfg.blocks[b].atoms;
        for (i, a) in atoms.iter().enumerate().skip(start) {
            if b == to.block && i == to.atom {
                return Some(true);
            }
            if blocks(a) {
                return Some(false);
            }
        }
        None
    };
    let mut seen = vec![false; cfg.blocks.len()];
    let mut stack: Vec<BlockId> = Vec::new();
    match scan(from.block, from.atom + 1) {
        Some(hit) => return !hit,
        None => stack.extend(cfg.successors(from.block)),
    }
    while let Some(b) = stack.pop() {
        if seen[b] {
            continue;
        }
        seen[b] = true;
        match scan(b, 0) {
            Some(true) => return false,
            Some(false) => {}
            None => stack.extend(cfg.successors(b)),
        }
    }
    true
}
