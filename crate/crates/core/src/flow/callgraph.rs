//! Intra-file call graph over flattened functions and external
//! reachability.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::*;
use crate::lowering::FlatContract;

/// (contract index, function index) into a slice of [`FlatContract`].
pub type FnId = (usize, usize);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    pub edges: BTreeMap<FnId, BTreeSet<FnId>>,
}

impl CallGraph {
    pub fn callees(&self, f: FnId) -> impl Iterator<Item = FnId> + '_ {
        self.edges.get(&f).into_iter().flatten().copied()
    }

    pub fn has_edge(&self, from: FnId, to: FnId) -> bool {
        self.edges.get(&from).is_some_and(|s| s.contains(&to))
    }
}

fn by_name(c: &FlatContract, ci: usize, name: &str, arity: usize) -> Vec<FnId> {
    let named: Vec<usize> = (0..c.functions.len()).filter(|&i| c.functions[i].name == name).collect();
    let exact: Vec<usize> = named.iter().copied().filter(|&i| c.functions[i].params.len() == arity).collect();
    let pick = if exact.is_empty() { named } else { exact };
    pick.into_iter().map(|i| (ci, i)).collect()
}

/// Edges for direct internal calls, `Library.f(...)`, `super.f(...)`,
/// `Base.f(...)` and using-for library calls resolvable within the file.
/// External calls are never edges.
pub fn build_call_graph(contracts: &[FlatContract]) -> CallGraph {
    let libraries: Vec<usize> =
        (0..contracts.len()).filter(|&i| contracts[i].kind == ContractKind::Library).collect();
    let mut graph = CallGraph::default();
    for (ci, c) in contracts.iter().enumerate() {
        for (fi, f) in c.functions.iter().enumerate() {
            let mut targets = BTreeSet::new();
            f.body.walk_exprs(&mut |e| {
                let ExprKind::Call(call) = &e.kind else { return };
                if call.kind.is_external() {
                    return;
                }
                let arity = call.args.len();
                match &call.callee.kind {
                    ExprKind::Ident(n) => targets.extend(by_name(c, ci, n, arity)),
                    ExprKind::Member { base, member } => match base.as_ident() {
                        Some(l) if libraries.iter().any(|&li| contracts[li].name == l) => {
                            let li = libraries.iter().copied().find(|&li| contracts[li].name == l).expect("library");
                            targets.extend(by_name(&contracts[li], li, member, arity));
                        }
                        Some(b) if b == "super" || c.linearization.iter().any(|x| x == b) => {
                            targets.extend(by_name(c, ci, member, arity));
                        }
                        _ if call.kind == CallKind::Internal => {
                            // `x.f(...)` through `using L for T`
                            for &li in &libraries {
                                targets.extend(by_name(&contracts[li], li, member, arity + 1));
                            }
                        }
                        _ => {}
                    },
                    _ => {}
                }
            });
            targets.remove(&(ci, fi));
            if !targets.is_empty() {
                graph.edges.insert((ci, fi), targets);
            }
        }
    }
    graph
}

/// For every function, whether it can be entered by an outside caller:
/// public/external non-constructors, and anything they transitively call.
pub fn externally_reachable(contracts: &[FlatContract], graph: &CallGraph) -> Vec<Vec<bool>> {
    let mut reach: Vec<Vec<bool>> = contracts.iter().map(|c| vec![false; c.functions.len()]).collect();
    let mut stack: Vec<FnId> = Vec::new();
    for (ci, c) in contracts.iter().enumerate() {
        for (fi, f) in c.functions.iter().enumerate() {
            if !f.is_constructor && f.visibility.is_callable_from_outside() {
                stack.push((ci, fi));
            }
        }
    }
    while let Some((ci, fi)) = stack.pop() {
        if reach[ci][fi] {
            continue;
        }
        reach[ci][fi] = true;
        stack.extend(graph.callees((ci, fi)));
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::lowering::linearize;

    fn setup(src: &str) -> (Vec<FlatContract>, CallGraph, Vec<Vec<bool>>) {
        let unit = parse_source(src, "g.sol").unwrap();
        let contracts = linearize(&unit, &[]).contracts;
        let g = build_call_graph(&contracts);
        let r = externally_reachable(&contracts, &g);
        (contracts, g, r)
    }

    fn reach_of(contracts: &[FlatContract], r: &[Vec<bool>], contract: &str, f: &str) -> bool {
        let ci = contracts.iter().position(|c| c.name == contract).unwrap();
        let fi = contracts[ci].functions.iter().position(|x| x.display_name() == f).unwrap();
        r[ci][fi]
    }

    #[test]
    fn hand_built_three_function_file() {
        // pub -> helper; orphan has no caller
        let src = "contract C {
            function pub() public { helper(); }
            function helper() internal { }
            function orphan() internal { }
        }";
        let (cs, g, r) = setup(src);
        assert!(g.has_edge((0, 0), (0, 1)));
        assert_eq!(g.edges.len(), 1);
        assert!(reach_of(&cs, &r, "C", "pub"));
        assert!(reach_of(&cs, &r, "C", "helper"));
        assert!(!reach_of(&cs, &r, "C", "orphan"));
    }

    #[test]
    fn constructor_only_callees_are_unreachable() {
        let src = "contract C { constructor() public { init(); } function init() internal { } }";
        let (cs, _, r) = setup(src);
        assert!(!reach_of(&cs, &r, "C", "constructor"));
        assert!(!reach_of(&cs, &r, "C", "init"));
    }

    #[test]
    fn library_and_using_calls_are_edges() {
        let src = "library L { function f(uint a) internal returns (uint) { return a; } }
                   contract C { using L for uint; function g(uint x) public { L.f(x); } function h(uint x) external { x.f(); } }";
        let (cs, g, r) = setup(src);
        assert!(g.has_edge((1, 0), (0, 0)));
        assert!(g.has_edge((1, 1), (0, 0)));
        assert!(reach_of(&cs, &r, "L", "f"));
    }

    #[test]
    fn external_calls_are_not_edges() {
        let src = "contract C { function a() public { this.b(); } function b() external { } function c() internal { } }";
        let (_, g, _) = setup(src);
        assert!(g.edges.is_empty());
    }
}
