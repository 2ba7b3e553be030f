//! Call-form normalization.
//!
//! Assigns a [`CallKind`] to every call in a source unit. Legacy
//! `.value(v)`/`.gas(g)` chains and braced `{value: v}` options are already
//! folded into [`Call::options`] by the parser, so both styles end up in the
//! same canonical shape. Single-argument calls of contract or interface names
//! become [`ExprKind::TypeCast`]. The pass is idempotent.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

const BUILTIN_NAMESPACES: &[&str] = &["abi", "bytes", "string", "block", "tx", "msg", "type", "super"];
const BUILTIN_FUNCTIONS: &[&str] = &[
    "require", "assert", "revert", "keccak256", "sha3", "sha256", "ripemd160", "ecrecover", "addmod", "mulmod",
    "selfdestruct", "suicide", "blockhash", "gasleft", "type",
];

struct FileIndex {
    contracts: BTreeSet<String>,
    /// Library name to the names of its functions.
    libraries: BTreeMap<String, BTreeSet<String>>,
    functions: BTreeSet<String>,
    structs: BTreeSet<String>,
}

impl FileIndex {
    fn build(unit: &SourceUnit) -> Self {
        let mut idx = FileIndex {
            contracts: BTreeSet::new(),
            libraries: BTreeMap::new(),
            functions: BTreeSet::new(),
            structs: BTreeSet::new(),
        };
        for c in &unit.contracts {
            idx.contracts.insert(c.name.clone());
            if c.kind == ContractKind::Library {
                idx.libraries.insert(c.name.clone(), c.functions.iter().map(|f| f.name.clone()).collect());
            }
            idx.functions.extend(c.functions.iter().map(|f| f.name.clone()));
            idx.structs.extend(c.type_decls.iter().cloned());
        }
        idx
    }

    fn is_contract_type(&self, t: &str) -> bool {
        self.contracts.contains(t) && !self.libraries.contains_key(t)
    }

    /// Names that look like a conversion to an interface declared elsewhere.
    fn looks_like_type(&self, name: &str) -> bool {
        if self.contracts.contains(name) {
            return !self.libraries.contains_key(name);
        }
        name.starts_with(|c: char| c.is_ascii_uppercase())
            && !self.functions.contains(name)
            && !self.structs.contains(name)
    }
}

/// Per-contract view: state vars (including inherited ones in this file)
/// and using-for directives.
struct Scope<'a> {
    idx: &'a FileIndex,
    contract: String,
    vars: BTreeMap<String, String>,
    using: Vec<UsingDirective>,
}

impl Scope<'_> {
    fn type_of(&self, e: &Expr) -> Option<String> {
        match &e.peeled().kind {
            ExprKind::Ident(n) => self.vars.get(n).cloned(),
            ExprKind::TypeCast { type_name, .. } => Some(type_name.clone()),
            ExprKind::MsgSender => Some("address".into()),
            ExprKind::MsgValue => Some("uint256".into()),
            ExprKind::This => Some(self.contract.clone()),
            ExprKind::Literal(l) => Some(
                match l.kind {
                    LitKind::Number => "uint256",
                    LitKind::Address => "address",
                    LitKind::String => "string",
                    LitKind::Bool => "bool",
                }
                .into(),
            ),
            ExprKind::Index { base, .. } => {
                let t = self.type_of(base)?;
                if let Some((_, v)) = types::mapping_parts(&t) {
                    Some(v)
                } else if types::is_array(&t) {
                    t.rfind('[').map(|i| t[..i].to_string())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn using_member(&self, member: &str) -> bool {
        self.using.iter().any(|u| self.idx.libraries.get(&u.library).is_some_and(|fns| fns.contains(member)))
    }

    fn classify(&self, call: &Call) -> CallKind {
        match &call.callee.kind {
            ExprKind::Member { base, member } => self.classify_member(call, base, member),
            ExprKind::Ident(n) if BUILTIN_FUNCTIONS.contains(&n.as_str()) => CallKind::Builtin,
            ExprKind::New(_) => CallKind::Builtin,
            _ => CallKind::Internal,
        }
    }

    fn classify_member(&self, call: &Call, base: &Expr, member: &str) -> CallKind {
        if let Some(name) = base.as_ident() {
            if BUILTIN_NAMESPACES.contains(&name) {
                return CallKind::Builtin;
            }
            if !self.vars.contains_key(name) && self.idx.contracts.contains(name) {
                // `Lib.f()` or `Base.f()`
                return CallKind::Internal;
            }
        }
        if matches!(base.peeled().kind, ExprKind::Call(ref c) if c.callee.as_ident() == Some("type")) {
            return CallKind::Builtin;
        }
        let recv_type = self.type_of(base);
        if let Some(t) = &recv_type {
            if (types::is_array(t) || t == "bytes") && matches!(member, "push" | "pop") {
                return CallKind::Builtin;
            }
            if types::is_non_address_value(t) || self.idx.structs.contains(t) {
                return CallKind::Internal;
            }
        }
        if self.using_member(member) {
            return CallKind::Internal;
        }
        let one_arg = call.args.positional().is_some_and(|a| a.len() == 1);
        match member {
            "call" => CallKind::LowLevelCall,
            "delegatecall" | "callcode" => CallKind::DelegateCall,
            "staticcall" => CallKind::ExternalMemberCall,
            "transfer" if one_arg && !recv_type.as_deref().is_some_and(|t| self.idx.is_contract_type(t)) => {
                CallKind::Transfer
            }
            "send" if one_arg && !recv_type.as_deref().is_some_and(|t| self.idx.is_contract_type(t)) => {
                CallKind::Send
            }
            "push" | "pop" if recv_type.is_none() => CallKind::Builtin,
            _ => CallKind::ExternalMemberCall,
        }
    }

    fn normalize_expr(&self, e: &mut Expr) {
        e.for_each_child_mut(&mut |c| self.normalize_expr(c));
        let cast = match &e.kind {
            ExprKind::Call(call) if call.options.is_empty() => match (&call.callee.kind, &call.args) {
                (ExprKind::Ident(n), CallArgs::Positional(args))
                    if args.len() == 1 && !self.vars.contains_key(n) && self.idx.looks_like_type(n) =>
                {
                    Some(n.clone())
                }
                _ => None,
            },
            _ => None,
        };
        if let Some(type_name) = cast {
            let ExprKind::Call(call) = std::mem::replace(&mut e.kind, ExprKind::This) else { unreachable!() };
            let CallArgs::Positional(mut args) = call.args else { unreachable!() };
            let arg = args.pop().expect("one argument");
            e.kind = ExprKind::TypeCast { type_name, arg: Box::new(arg) };
            return;
        }
        if let ExprKind::Call(call) = &e.kind {
            let kind = self.classify(call);
            if let ExprKind::Call(call) = &mut e.kind {
                call.kind = kind;
            }
        }
    }
}

fn collect_locals(block: &Block, vars: &mut BTreeMap<String, String>) {
    block.walk(&mut |s| {
        if let StmtKind::LocalDecl { vars: decls, .. } = &s.kind {
            for v in decls.iter().flatten() {
                vars.insert(v.name.clone(), v.type_name.clone());
            }
        }
    });
}

fn add_params(params: &[Param], vars: &mut BTreeMap<String, String>) {
    for p in params {
        if let Some(n) = &p.name {
            vars.insert(n.clone(), p.type_name.clone());
        }
    }
}

/// Contract names reachable through `is` clauses within the unit, the
/// contract itself first.
pub(crate) fn ancestors<'a>(unit: &'a SourceUnit, name: &str) -> Vec<&'a ContractDef> {
    let mut out: Vec<&ContractDef> = Vec::new();
    let mut stack = vec![name.to_string()];
    while let Some(n) = stack.pop() {
        if out.iter().any(|c| c.name == n) {
            continue;
        }
        if let Some(c) = unit.contract(&n) {
            out.push(c);
            stack.extend(c.bases.iter().rev().cloned());
        }
    }
    out
}

pub fn normalize_call_forms(unit: &mut SourceUnit) {
    let idx = FileIndex::build(unit);
    let scopes: Vec<(BTreeMap<String, String>, Vec<UsingDirective>)> = unit
        .contracts
        .iter()
        .map(|c| {
            let chain = ancestors(unit, &c.name);
            let mut vars = BTreeMap::new();
            let mut using = Vec::new();
            for a in chain.iter().rev() {
                for v in &a.state_vars {
                    vars.insert(v.name.clone(), v.type_name.clone());
                }
                using.extend(a.using.iter().cloned());
            }
            (vars, using)
        })
        .collect();

    for (c, (vars, using)) in unit.contracts.iter_mut().zip(scopes) {
        let base = Scope { idx: &idx, contract: c.name.clone(), vars, using };
        for v in &mut c.state_vars {
            if let Some(init) = &mut v.initializer {
                base.normalize_expr(init);
            }
        }
        for f in &mut c.functions {
            let mut vars = base.vars.clone();
            add_params(&f.params, &mut vars);
            add_params(&f.returns, &mut vars);
            if let Some(b) = &f.body {
                collect_locals(b, &mut vars);
            }
            let scope = Scope { idx: &idx, contract: c.name.clone(), vars, using: base.using.clone() };
            for m in &mut f.modifiers_invoked {
                for a in m.args.iter_mut().flatten() {
                    scope.normalize_expr(a);
                }
            }
            if let Some(b) = &mut f.body {
                for s in &mut b.stmts {
                    s.for_each_expr_mut(&mut |e| scope.normalize_expr(e));
                }
            }
        }
        for m in &mut c.modifiers {
            let mut vars = base.vars.clone();
            add_params(&m.params, &mut vars);
            collect_locals(&m.body, &mut vars);
            let scope = Scope { idx: &idx, contract: c.name.clone(), vars, using: base.using.clone() };
            for s in &mut m.body.stmts {
                s.for_each_expr_mut(&mut |e| scope.normalize_expr(e));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::parse_source;
    use crate::frontend::ast::*;

    fn kinds(body: &str) -> Vec<CallKind> {
        let src = format!(
            "library L {{ function inc(uint a) internal returns (uint) {{ return a + 1; }} }}
             interface IToken {{ function transfer(address to, uint v) external returns (bool); }}
             contract C {{
               using L for uint;
               IToken token; address payable owner; uint[] xs; mapping(address => uint) bal;
               function helper() internal {{}}
               function f(address payable to, uint n) public payable {{ {body} }}
             }}"
        );
        let unit = parse_source(&src, "n.sol").unwrap();
        let f = &unit.contract("C").unwrap().functions[1];
        let mut out = Vec::new();
        f.body.as_ref().unwrap().walk_exprs(&mut |e| {
            if let ExprKind::Call(c) = &e.kind {
                out.push(c.kind);
            }
        });
        out
    }

    #[test]
    fn canonical_ether_transfer_forms() {
        assert_eq!(kinds("to.call.value(n)(\"\");"), [CallKind::LowLevelCall]);
        assert_eq!(kinds("to.call.gas(5000).value(n)();"), [CallKind::LowLevelCall]);
        assert_eq!(kinds("to.call{value: n}(\"\");"), [CallKind::LowLevelCall]);
        assert_eq!(kinds("to.call(\"\");"), [CallKind::LowLevelCall]);
        assert_eq!(kinds("to.transfer(n);"), [CallKind::Transfer]);
        assert_eq!(kinds("to.send(n);"), [CallKind::Send]);
        assert_eq!(kinds("to.delegatecall(\"\");"), [CallKind::DelegateCall]);
        assert_eq!(kinds("token.transfer(to, n);"), [CallKind::ExternalMemberCall]);
        assert_eq!(kinds("IToken(to).transfer(to, n);"), [CallKind::ExternalMemberCall]);
    }

    #[test]
    fn non_external_calls() {
        assert_eq!(kinds("helper();"), [CallKind::Internal]);
        assert_eq!(kinds("n.inc();"), [CallKind::Internal]);
        assert_eq!(kinds("L.inc(n);"), [CallKind::Internal]);
        assert_eq!(kinds("xs.push(n);"), [CallKind::Builtin]);
        assert_eq!(kinds("abi.encode(n);"), [CallKind::Builtin]);
        assert_eq!(kinds("keccak256(abi.encode(n));"), [CallKind::Builtin, CallKind::Builtin]);
    }

    #[test]
    fn legacy_and_braced_options_agree() {
        let grab = |body: &str| {
            let src = format!("contract C {{ function f(address to) public {{ {body} }} }}");
            let unit = parse_source(&src, "n.sol").unwrap();
            let stmt = unit.contracts[0].functions[0].body.as_ref().unwrap().stmts[0].clone();
            let StmtKind::Expr(e) = stmt.kind else { panic!() };
            let ExprKind::Call(c) = e.kind else { panic!() };
            (c.kind, c.value_slot().map(crate::frontend::render::expr_text), c.gas_option().is_some())
        };
        assert_eq!(grab("to.call.value(1 ether).gas(2300)();"), grab("to.call{value: 1 ether, gas: 2300}();"));
    }

    #[test]
    fn contract_name_call_becomes_cast() {
        let unit = parse_source(
            "interface I { function g() external; } contract C { function f(address a) public { I(a).g(); } }",
            "n.sol",
        )
        .unwrap();
        let body = unit.contract("C").unwrap().functions[0].body.as_ref().unwrap();
        let StmtKind::Expr(e) = &body.stmts[0].kind else { panic!() };
        let call = e.as_call().unwrap();
        assert!(matches!(call.receiver().unwrap().kind, ExprKind::TypeCast { .. }));
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut unit = parse_source(
            "contract C { address t; function f() public { t.call.value(1)(); C(t).f(); } }",
            "n.sol",
        )
        .unwrap();
        let once = unit.clone();
        super::normalize_call_forms(&mut unit);
        assert_eq!(unit, once);
    }
}
