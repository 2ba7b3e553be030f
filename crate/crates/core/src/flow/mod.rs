//! Control-flow and data-flow facts over flattened contracts.

pub mod callgraph;
pub mod cfg;
pub mod facts;
pub mod provenance;

use std::collections::BTreeSet;

use crate::budget::{Deadline, TimedOut};
use crate::frontend::ast::*;
use crate::lowering::FlatContract;

pub use callgraph::{build_call_graph, externally_reachable, CallGraph};
pub use cfg::{build_cfg, Cfg, EdgeKind};
pub use facts::{guards_of, writes_after, CallSite, Guard, GuardSource, SitePos, StateWrite, WriteKind, WriteScope};
pub use provenance::{value_provenance, Provenance};

#[derive(Debug, Clone)]
pub struct FunctionFacts {
    /// Index into the contract's `functions`.
    pub index: usize,
    pub qualified_name: String,
    pub cfg: Cfg,
    pub live: Vec<bool>,
    pub scope: WriteScope,
    /// External call sites in live blocks.
    pub sites: Vec<CallSite>,
    /// State variables written anywhere in the function.
    pub written: BTreeSet<String>,
    pub has_opaque: bool,
}

impl FunctionFacts {
    pub fn new(flat: &FlatContract, index: usize) -> Self {
        let f = &flat.functions[index];
        let state: Vec<String> = flat.state_vars.iter().map(|v| v.def.name.clone()).collect();
        let scope = WriteScope::new(state, &f.params, &f.body).with_returns(&f.returns);
        let mut cfg = build_cfg(&f.body);
        facts::annotate_writes(&mut cfg, &scope);
        let live = cfg.live();
        let qualified_name = f.qualified_name();
        let sites = facts::call_sites(&cfg, &qualified_name).into_iter().filter(|s| live[s.pos.block]).collect();
        let mut written = BTreeSet::new();
        let mut has_opaque = false;
        for b in &cfg.blocks {
            for a in &b.atoms {
                for w in &a.writes {
                    if w.is_opaque() {
                        has_opaque = true;
                    } else {
                        written.insert(w.target.clone());
                    }
                }
            }
        }
        FunctionFacts { index, qualified_name, cfg, live, scope, sites, written, has_opaque }
    }

    pub fn atom(&self, pos: SitePos) -> &cfg::Atom {
        &self.cfg.blocks[pos.block].atoms[pos.atom]
    }

    /// The only value ever given to local `name`: its declaration initializer
    /// or a single plain assignment, when there is exactly one.
    /// State variables read by `e`, through storage aliases as well.
    pub fn state_reads(&self, e: &Expr) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        e.walk(&mut |x| {
            if let ExprKind::Ident(n) = &x.kind {
                match self.scope.locals.get(n) {
                    Some(l) => out.extend(l.storage_alias.iter().cloned()),
                    None if self.scope.is_state_var(n) => {
                        out.insert(n.clone());
                    }
                    None => {}
                }
            }
        });
        out
    }

    pub fn single_definition(&self, name: &str) -> Option<&Expr> {
        let mut defs: Vec<&Expr> = Vec::new();
        let mut other = false;
        for b in &self.cfg.blocks {
            for a in &b.atoms {
                let Some(s) = a.stmt() else { continue };
                match &s.kind {
                    StmtKind::LocalDecl { vars, tuple, init } => {
                        if vars.iter().flatten().any(|v| v.name == name) {
                            match (tuple, init) {
                                (false, Some(e)) => defs.push(e),
                                (false, None) => {}
                                (true, _) => other = true,
                            }
                        }
                    }
                    StmtKind::Assign { target, op, value } if target.as_ident() == Some(name) => {
                        if op.is_compound() {
                            other = true;
                        } else {
                            defs.push(value);
                        }
                    }
                    _ => {}
                }
                for e in a.exprs() {
                    e.walk(&mut |x| match &x.kind {
                        ExprKind::Assign { target, .. } if target.root_ident() == Some(name) => other = true,
                        ExprKind::Unary { op, operand, .. } if op.writes_operand() && operand.root_ident() == Some(name) => {
                            other = true
                        }
                        _ => {}
                    });
                }
            }
        }
        if other || defs.len() != 1 {
            return None;
        }
        defs.pop()
    }

    /// Values assigned to state variable `name` by plain `name = v`
    /// statements, or `None` if it is written in any other way.
    pub fn plain_assignments_to(&self, name: &str) -> Option<Vec<&Expr>> {
        let mut out = Vec::new();
        for b in &self.cfg.blocks {
            for a in &b.atoms {
                let plain = match a.stmt().map(|s| &s.kind) {
                    Some(StmtKind::Assign { target, op: AssignOp::Assign, value })
                        if target.as_ident() == Some(name) && self.scope.is_state_var(name) =>
                    {
                        Some(value)
                    }
                    _ => None,
                };
                let hits = a.writes.iter().filter(|w| w.target == name).count();
                match (plain, hits) {
                    (_, 0) => {}
                    (Some(v), 1) => out.push(v),
                    _ => return None,
                }
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone)]
pub struct ContractFacts {
    pub flat: FlatContract,
    /// One entry per function of `flat`, same order.
    pub functions: Vec<FunctionFacts>,
    pub fixed_vars: BTreeSet<String>,
    /// Guards of every ether-sending call in the contract.
    pub outflow_guards: Vec<OutflowGuard>,
}

/// A condition dominating an ether transfer, with the state it reads.
#[derive(Debug, Clone)]
pub struct OutflowGuard {
    pub guard: Guard,
    pub reads: BTreeSet<String>,
}

impl ContractFacts {
    pub fn build(flat: FlatContract, deadline: &Deadline) -> Result<Self, TimedOut> {
        let mut functions = Vec::with_capacity(flat.functions.len());
        for i in 0..flat.functions.len() {
            deadline.check()?;
            functions.push(FunctionFacts::new(&flat, i));
        }
        let mut outflow_guards = Vec::new();
        for ff in &functions {
            for site in ff.sites.iter().filter(|s| s.sends_ether()) {
                deadline.check()?;
                for guard in guards_of(&ff.cfg, site.pos) {
                    let reads = ff.state_reads(&guard.expr);
                    outflow_guards.push(OutflowGuard { guard, reads });
                }
            }
        }
        let mut facts = ContractFacts { flat, functions, fixed_vars: BTreeSet::new(), outflow_guards };
        facts.fixed_vars = provenance::fixed_state_vars(&facts);
        Ok(facts)
    }

    pub fn function(&self, qualified_name: &str) -> Option<&FunctionFacts> {
        self.functions.iter().find(|f| f.qualified_name == qualified_name)
    }
}

/// Flow facts for every flattened contract of one file, with
/// `callable_externally` filled in from the file's call graph.
pub fn analyze_contracts(mut contracts: Vec<FlatContract>, deadline: &Deadline) -> Result<Vec<ContractFacts>, TimedOut> {
    let graph = build_call_graph(&contracts);
    let reach = externally_reachable(&contracts, &graph);
    for (c, r) in contracts.iter_mut().zip(&reach) {
        for (f, reachable) in c.functions.iter_mut().zip(r) {
            f.callable_externally = *reachable;
        }
    }
    contracts.into_iter().map(|c| ContractFacts::build(c, deadline)).collect()
}
