//! Inheritance resolution and modifier inlining.
//!
//! Linearization is a depth-first, declaration-order post-order walk over
//! base contracts (bases before derived). When several contracts in the
//! linearization define the same function or modifier, the last one wins,
//! i.e. the most derived. Constructors of all contracts in the linearization
//! are merged into one constructor, base bodies first.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::frontend::ast::*;
use crate::span::Span;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum LoweringError {
    #[error("cyclic inheritance through '{0}'")]
    CyclicInheritance(String),
    #[error("modifier '{name}' expects {expected} argument(s), got {got}")]
    ModifierArityMismatch { name: String, expected: usize, got: usize },
    #[error("base contract '{0}' not found")]
    UnresolvedBase(String),
    #[error("modifier '{0}' not found; treated as a no-op")]
    UnresolvedModifier(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatStateVar {
    pub def: StateVarDef,
    /// Contract that declared the variable.
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatFunction {
    pub contract: String,
    pub name: String,
    pub kind: FunctionKind,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub is_constructor: bool,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    /// Body with every modifier inlined.
    pub body: Block,
    /// Filled in from the call graph; see [`crate::flow::callgraph`].
    pub callable_externally: bool,
    pub span: Span,
}

impl FlatFunction {
    /// Name used in reports: `constructor`, `fallback` and `receive` for the
    /// unnamed kinds.
    pub fn display_name(&self) -> &str {
        match self.kind {
            FunctionKind::Constructor => "constructor",
            FunctionKind::Fallback if self.name.is_empty() => "fallback",
            FunctionKind::Receive => "receive",
            _ => &self.name,
        }
    }

    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.contract, self.display_name())
    }

    fn signature(&self) -> String {
        signature(self.display_name(), &self.params)
    }
}

fn signature(name: &str, params: &[Param]) -> String {
    let types: Vec<&str> = params.iter().map(|p| p.type_name.as_str()).collect();
    format!("{name}({})", types.join(","))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatContract {
    pub name: String,
    pub kind: ContractKind,
    pub is_abstract: bool,
    /// Contracts in resolution order, bases first, ending with this one.
    pub linearization: Vec<String>,
    pub state_vars: Vec<FlatStateVar>,
    pub functions: Vec<FlatFunction>,
    pub span: Span,
}

impl FlatContract {
    /// The most derived declaration of a state variable.
    pub fn state_var(&self, name: &str) -> Option<&StateVarDef> {
        self.state_vars.iter().rev().find(|v| v.def.name == name).map(|v| &v.def)
    }

    pub fn function(&self, name: &str) -> Option<&FlatFunction> {
        self.functions.iter().find(|f| f.display_name() == name)
    }

    pub fn constructor(&self) -> Option<&FlatFunction> {
        self.functions.iter().find(|f| f.is_constructor)
    }

    /// Re-express the flattened contract as a base-less contract definition.
    /// Flattening the result reproduces `self`.
    pub fn to_contract_def(&self) -> ContractDef {
        ContractDef {
            name: self.name.clone(),
            kind: self.kind,
            is_abstract: self.is_abstract,
            bases: Vec::new(),
            state_vars: self.state_vars.iter().map(|v| v.def.clone()).collect(),
            functions: self
                .functions
                .iter()
                .map(|f| FunctionDef {
                    name: f.name.clone(),
                    kind: f.kind,
                    visibility: f.visibility,
                    mutability: f.mutability,
                    modifiers_invoked: Vec::new(),
                    params: f.params.clone(),
                    returns: f.returns.clone(),
                    body: Some(f.body.clone()),
                    is_constructor: f.is_constructor,
                    span: f.span,
                })
                .collect(),
            modifiers: Vec::new(),
            using: Vec::new(),
            type_decls: Vec::new(),
            span: self.span,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lowered {
    pub contracts: Vec<FlatContract>,
    pub diagnostics: Vec<Diagnostic>,
}

fn lookup<'a>(name: &str, unit: &'a SourceUnit, all_units: &[&'a SourceUnit]) -> Option<&'a ContractDef> {
    unit.contract(name).or_else(|| all_units.iter().find_map(|u| u.contract(name)))
}

/// Declaration-order DFS post-order over the bases of `root`.
pub fn linearization<'a>(
    root: &'a ContractDef,
    unit: &'a SourceUnit,
    all_units: &[&'a SourceUnit],
    diags: &mut Vec<Diagnostic>,
) -> Result<Vec<&'a ContractDef>, LoweringError> {
    fn visit<'a>(
        c: &'a ContractDef,
        unit: &'a SourceUnit,
        all_units: &[&'a SourceUnit],
        on_stack: &mut Vec<String>,
        out: &mut Vec<&'a ContractDef>,
        diags: &mut Vec<Diagnostic>,
    ) -> Result<(), LoweringError> {
        if on_stack.contains(&c.name) {
            return Err(LoweringError::CyclicInheritance(c.name.clone()));
        }
        if out.iter().any(|d| d.name == c.name) {
            return Ok(());
        }
        on_stack.push(c.name.clone());
        for b in &c.bases {
            match lookup(b, unit, all_units) {
                Some(base) => visit(base, unit, all_units, on_stack, out, diags)?,
                None => {
                    let e = LoweringError::UnresolvedBase(b.clone());
                    diags.push(Diagnostic::warning(c.span, format!("{}: {e}", c.name)));
                }
            }
        }
        on_stack.pop();
        out.push(c);
        Ok(())
    }
    let mut out = Vec::new();
    visit(root, unit, all_units, &mut Vec::new(), &mut out, diags)?;
    Ok(out)
}

/// Flatten every contract and library of `unit`. Interfaces are skipped.
/// Bases missing from `unit` are looked up in `all_units`.
pub fn linearize(unit: &SourceUnit, all_units: &[&SourceUnit]) -> Lowered {
    let mut lowered = Lowered::default();
    for c in &unit.contracts {
        if c.kind == ContractKind::Interface {
            continue;
        }
        match flatten_contract(c, unit, all_units, &mut lowered.diagnostics) {
            Ok(flat) => lowered.contracts.push(flat),
            Err(e) => lowered.diagnostics.push(Diagnostic::error(c.span, format!("{}: {e}; contract skipped", c.name))),
        }
    }
    lowered
}

pub fn flatten_contract(
    c: &ContractDef,
    unit: &SourceUnit,
    all_units: &[&SourceUnit],
    diags: &mut Vec<Diagnostic>,
) -> Result<FlatContract, LoweringError> {
    let chain = linearization(c, unit, all_units, diags)?;
    let chain_names: BTreeSet<String> = chain.iter().map(|d| d.name.clone()).collect();

    let mut state_vars = Vec::new();
    let mut modifiers: BTreeMap<String, &ModifierDef> = BTreeMap::new();
    for d in &chain {
        state_vars.extend(d.state_vars.iter().map(|v| FlatStateVar { def: v.clone(), origin: d.name.clone() }));
        for m in &d.modifiers {
            modifiers.insert(m.name.clone(), m);
        }
    }

    let mut functions: Vec<FlatFunction> = Vec::new();
    let mut by_signature: BTreeMap<String, usize> = BTreeMap::new();
    let mut ctor: Option<FlatFunction> = None;
    for d in &chain {
        for f in &d.functions {
            let Some(body) = &f.body else { continue };
            let body = inline_modifiers(f, body, &modifiers, &chain_names, diags);
            let flat = FlatFunction {
                contract: c.name.clone(),
                name: f.name.clone(),
                kind: f.kind,
                visibility: f.visibility,
                mutability: f.mutability,
                is_constructor: f.is_constructor,
                params: f.params.clone(),
                returns: f.returns.clone(),
                body,
                callable_externally: false,
                span: f.span,
            };
            if f.is_constructor {
                ctor = Some(merge_constructor(ctor, flat, d.name == c.name));
                continue;
            }
            match by_signature.get(&flat.signature()) {
                Some(&i) => functions[i] = flat,
                None => {
                    by_signature.insert(flat.signature(), functions.len());
                    functions.push(flat);
                }
            }
        }
    }
    if let Some(mut k) = ctor {
        k.name = String::new();
        k.kind = FunctionKind::Constructor;
        functions.insert(0, k);
    }

    Ok(FlatContract {
        name: c.name.clone(),
        kind: c.kind,
        is_abstract: c.is_abstract,
        linearization: chain.iter().map(|d| d.name.clone()).collect(),
        state_vars,
        functions,
        span: c.span,
    })
}

/// Base constructor bodies run before derived ones; the signature and
/// attributes come from the contract's own constructor when it has one.
fn merge_constructor(acc: Option<FlatFunction>, next: FlatFunction, is_own: bool) -> FlatFunction {
    let Some(mut acc) = acc else { return next };
    let mut stmts = std::mem::take(&mut acc.body.stmts);
    stmts.extend(next.body.stmts.iter().cloned());
    if is_own {
        let mut own = next;
        own.body.stmts = stmts;
        own
    } else {
        acc.body.stmts = stmts;
        acc
    }
}

/// Inline `f`'s modifiers around `body`, first listed outermost. Unresolved
/// modifiers and arity mismatches are recorded and treated as no-ops.
/// Invocations naming a base contract are constructor arguments and ignored.
pub fn inline_modifiers(
    f: &FunctionDef,
    body: &Block,
    modifiers: &BTreeMap<String, &ModifierDef>,
    bases: &BTreeSet<String>,
    diags: &mut Vec<Diagnostic>,
) -> Block {
    let mut stmts = body.stmts.clone();
    for inv in f.modifiers_invoked.iter().rev() {
        if bases.contains(&inv.name) {
            continue;
        }
        let Some(m) = modifiers.get(&inv.name) else {
            let e = LoweringError::UnresolvedModifier(inv.name.clone());
            diags.push(Diagnostic::warning(inv.span, e.to_string()));
            continue;
        };
        let args: &[Expr] = inv.args.as_deref().unwrap_or(&[]);
        if args.len() != m.params.len() {
            let e = LoweringError::ModifierArityMismatch {
                name: inv.name.clone(),
                expected: m.params.len(),
                got: args.len(),
            };
            diags.push(Diagnostic::warning(inv.span, format!("{e}; treated as a no-op")));
            continue;
        }
        let subst: BTreeMap<&str, &Expr> =
            m.params.iter().zip(args).filter_map(|(p, a)| p.name.as_deref().map(|n| (n, a))).collect();
        let mut wrapper = m.body.stmts.clone();
        if !subst.is_empty() {
            for s in &mut wrapper {
                s.for_each_expr_mut(&mut |e| substitute(e, &subst));
            }
        }
        stmts = splice(wrapper, &stmts);
    }
    Block { stmts, unchecked: body.unchecked, span: body.span }
}

fn substitute(e: &mut Expr, subst: &BTreeMap<&str, &Expr>) {
    if let ExprKind::Ident(n) = &e.kind {
        if let Some(arg) = subst.get(n.as_str()) {
            *e = (*arg).clone();
            return;
        }
    }
    e.for_each_child_mut(&mut |c| substitute(c, subst));
}

/// Replace every placeholder in `wrapper` by a copy of `body`.
fn splice(wrapper: Vec<Stmt>, body: &[Stmt]) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(wrapper.len() + body.len());
    for s in wrapper {
        if matches!(s.kind, StmtKind::Placeholder) {
            out.extend(body.iter().cloned());
        } else {
            out.push(splice_nested(s, body));
        }
    }
    out
}

fn splice_nested(mut s: Stmt, body: &[Stmt]) -> Stmt {
    let span = s.span;
    let as_branch = |b: Box<Stmt>| -> Box<Stmt> {
        if matches!(b.kind, StmtKind::Placeholder) {
            Box::new(Stmt::new(StmtKind::Block(Block { stmts: body.to_vec(), unchecked: false, span: b.span }), b.span))
        } else {
            Box::new(splice_nested(*b, body))
        }
    };
    s.kind = match s.kind {
        StmtKind::Block(b) => StmtKind::Block(Block { stmts: splice(b.stmts, body), ..b }),
        StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
            cond,
            then_branch: as_branch(then_branch),
            else_branch: else_branch.map(as_branch),
        },
        StmtKind::While { cond, body: b } => StmtKind::While { cond, body: as_branch(b) },
        StmtKind::DoWhile { body: b, cond } => StmtKind::DoWhile { body: as_branch(b), cond },
        StmtKind::For { init, cond, update, body: b } => StmtKind::For { init, cond, update, body: as_branch(b) },
        other => other,
    };
    Stmt { span, ..s }
}
