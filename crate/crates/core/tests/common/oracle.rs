//! Brute-force reference for the flow queries: random small function
//! bodies, and answers computed by enumerating CFG paths.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use retriage::budget::Deadline;
use retriage::flow::cfg::{AtomKind, Cfg, EdgeKind};
use retriage::flow::{analyze_contracts, guards_of, writes_after, FunctionFacts, SitePos};
use retriage::frontend::ast::StmtKind;
use retriage::frontend::parse_source;
use retriage::frontend::render::stmt_text;
use retriage::lowering::linearize;

pub const MAX_BLOCKS: usize = 8;

fn gen_stmt(rng: &mut StdRng, depth: usize, in_loop: bool, out: &mut String) {
    let pick = if depth == 0 { rng.random_range(0..5) } else { rng.random_range(0..10) };
    match pick {
        0 | 1 => out.push_str(&format!("s{} = {};\n", rng.random_range(0..3), rng.random_range(0..3))),
        2 => out.push_str(&format!("l{} = 1;\n", rng.random_range(0..2))),
        3 | 4 => out.push_str("a.call(\"\");\n"),
        5 => out.push_str(&format!("require(c{});\n", rng.random_range(0..3))),
        6 => {
            out.push_str(&format!("if (c{}) {{\n", rng.random_range(0..3)));
            gen_block(rng, depth - 1, in_loop, out);
            if rng.random_bool(0.5) {
                out.push_str("} else {\n");
                gen_block(rng, depth - 1, in_loop, out);
            }
            out.push_str("}\n");
        }
        7 => {
            out.push_str(&format!("while (c{}) {{\n", rng.random_range(0..3)));
            gen_block(rng, depth - 1, true, out);
            out.push_str("}\n");
        }
        8 => {
            out.push_str(&format!("for (; c{}; ) {{\n", rng.random_range(0..3)));
            gen_block(rng, depth - 1, true, out);
            out.push_str("}\n");
        }
        _ => {
            let choices: &[&str] = if in_loop { &["break;\n", "continue;\n", "return;\n", "revert();\n"] } else { &["return;\n", "revert();\n"] };
            out.push_str(choices[rng.random_range(0..choices.len())]);
        }
    }
}

fn gen_block(rng: &mut StdRng, depth: usize, in_loop: bool, out: &mut String) {
    for _ in 0..rng.random_range(1..4) {
        gen_stmt(rng, depth, in_loop, out);
    }
}

pub fn random_contract(seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut body = String::new();
    gen_block(&mut rng, 2, false, &mut body);
    format!(
        "contract R {{\n uint s0; uint s1; uint s2;\n function f(address a, bool c0, bool c1, bool c2) public {{\n uint l0; uint l1;\n{body} }}\n}}\n"
    )
}

/// Facts for `R.f`, if the body fits the block limit and has a live call.
pub fn facts_for(src: &str) -> Option<FunctionFacts> {
    let unit = parse_source(src, "r.sol").expect("generated source parses");
    let mut facts = analyze_contracts(linearize(&unit, &[]).contracts, &Deadline::none()).expect("no deadline");
    let c = facts.pop()?;
    let ff = c.functions.into_iter().find(|f| f.qualified_name == "R.f")?;
    (ff.cfg.blocks.len() <= MAX_BLOCKS && !ff.sites.is_empty()).then_some(ff)
}

/// State variable written by an atom, read off its text alone.
fn oracle_write(cfg: &Cfg, b: usize, i: usize) -> Option<String> {
    let atom = &cfg.blocks[b].atoms[i];
    let AtomKind::Stmt(s) = &atom.kind else { return None };
    if !matches!(s.kind, StmtKind::Assign { .. }) {
        return None;
    }
    let text = stmt_text(s);
    let target = text.split_whitespace().next()?;
    target.starts_with('s').then(|| target.to_string())
}

fn successors(cfg: &Cfg, b: usize) -> Vec<usize> {
    cfg.edges.iter().filter(|e| e.from == b).map(|e| e.to).collect()
}

/// Every path from entry that visits no block more than twice, i.e.
/// simple paths with loops unrolled once.
fn bounded_paths(cfg: &Cfg) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut visits = vec![0u8; cfg.blocks.len()];
    let mut path = vec![cfg.entry];
    visits[cfg.entry] = 1;
    fn go(cfg: &Cfg, path: &mut Vec<usize>, visits: &mut [u8], out: &mut Vec<Vec<usize>>) {
        let last = *path.last().expect("nonempty");
        let mut extended = false;
        for s in successors(cfg, last) {
            if visits[s] < 2 {
                extended = true;
                visits[s] += 1;
                path.push(s);
                go(cfg, path, visits, out);
                path.pop();
                visits[s] -= 1;
            }
        }
        if !extended {
            out.push(path.clone());
        }
    }
    go(cfg, &mut path, &mut visits, &mut out);
    out
}

pub fn oracle_writes_after(cfg: &Cfg, pos: SitePos) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for path in bounded_paths(cfg) {
        for (k, &b) in path.iter().enumerate() {
            if b != pos.block {
                continue;
            }
            for i in pos.atom + 1..cfg.blocks[b].atoms.len() {
                out.extend(oracle_write(cfg, b, i));
            }
            for &later in &path[k + 1..] {
                for i in 0..cfg.blocks[later].atoms.len() {
                    out.extend(oracle_write(cfg, later, i));
                }
            }
        }
    }
    out
}

/// Simple paths from entry that end on first arrival at `target`.
fn simple_paths_to(cfg: &Cfg, target: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(cfg: &Cfg, target: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().expect("nonempty");
        if last == target {
            out.push(path.clone());
            return;
        }
        for s in successors(cfg, last) {
            if !path.contains(&s) {
                path.push(s);
                go(cfg, target, path, out);
                path.pop();
            }
        }
    }
    go(cfg, target, &mut vec![cfg.entry], &mut out);
    out
}

/// (condition text, negated) for every require and branch arm that lies on
/// all paths from entry to the site.
pub fn oracle_guards(cfg: &Cfg, pos: SitePos) -> BTreeSet<(String, bool)> {
    let paths = simple_paths_to(cfg, pos.block);
    let mut out = BTreeSet::new();
    if paths.is_empty() {
        return out;
    }
    for (b, block) in cfg.blocks.iter().enumerate() {
        for (i, atom) in block.atoms.iter().enumerate() {
            let AtomKind::Stmt(s) = &atom.kind else { continue };
            let StmtKind::Require { cond, .. } = &s.kind else { continue };
            let dominates = if b == pos.block { i < pos.atom } else { paths.iter().all(|p| p.contains(&b)) };
            if dominates {
                out.insert((retriage::frontend::render::expr_text(cond), false));
            }
        }
    }
    for e in &cfg.edges {
        let Some(AtomKind::Cond(cond)) = cfg.blocks[e.from].atoms.last().map(|a| &a.kind) else { continue };
        let negated = match e.kind {
            EdgeKind::True => false,
            EdgeKind::False | EdgeKind::Seq => true,
            EdgeKind::LoopBack => continue,
        };
        let uses = |p: &Vec<usize>| p.windows(2).any(|w| w[0] == e.from && w[1] == e.to);
        if paths.iter().all(uses) {
            out.insert((retriage::frontend::render::expr_text(cond), negated));
        }
    }
    out
}

pub fn library_writes_after(ff: &FunctionFacts, idx: usize) -> BTreeSet<String> {
    let s = &ff.sites[idx];
    writes_after(&ff.cfg, s.pos, s.location).into_iter().map(|w| w.target).collect()
}

pub fn library_guards(ff: &FunctionFacts, idx: usize) -> BTreeSet<(String, bool)> {
    guards_of(&ff.cfg, ff.sites[idx].pos)
        .into_iter()
        .map(|g| (retriage::frontend::render::expr_text(&g.expr), g.negated))
        .collect()
}

#[derive(Debug, Default)]
pub struct OracleRun {
    pub cfgs: usize,
    pub sites: usize,
    pub disagreements: Vec<String>,
}

/// Compare library and oracle on `count` accepted random functions.
pub fn run(count: usize, seed: u64) -> OracleRun {
    let mut run = OracleRun::default();
    let mut s = seed;
    while run.cfgs < count {
        s = s.wrapping_add(1);
        let src = random_contract(s);
        let Some(ff) = facts_for(&src) else { continue };
        run.cfgs += 1;
        for idx in 0..ff.sites.len() {
            run.sites += 1;
            let pos = ff.sites[idx].pos;
            let (lw, ow) = (library_writes_after(&ff, idx), oracle_writes_after(&ff.cfg, pos));
            if lw != ow {
                run.disagreements.push(format!("seed {s} site {idx}: writes_after {lw:?} vs oracle {ow:?}\n{src}"));
            }
            let (lg, og) = (library_guards(&ff, idx), oracle_guards(&ff.cfg, pos));
            if lg != og {
                run.disagreements.push(format!("seed {s} site {idx}: guards {lg:?} vs oracle {og:?}\n{src}"));
            }
        }
    }
    run
}
