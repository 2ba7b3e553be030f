//! Control-flow graphs over inlined function bodies.
//!
//! Blocks hold *atoms*: leaf statements, plus the condition expression of
//! each branch or loop. `require` stays inline (its failing arm simply has no
//! successor); `revert`/`throw` end their block with no successor and
//! `return` jumps to the exit block.

use std::sync::OnceLock;

use serde::Serialize;

use crate::frontend::ast::*;
use crate::span::Span;

use super::facts::StateWrite;

pub type BlockId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Seq,
    True,
    False,
    LoopBack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtomKind {
    Stmt(Stmt),
    /// Condition of the branch or loop that ends this block.
    Cond(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub kind: AtomKind,
    pub span: Span,
    /// State writes performed by this atom, filled in by annotation.
    pub writes: Vec<StateWrite>,
}

impl Atom {
    pub fn new(kind: AtomKind, span: Span) -> Self {
        Atom { kind, span, writes: Vec::new() }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            AtomKind::Stmt(s) => s.own_exprs(),
            AtomKind::Cond(e) => vec![e],
        }
    }

    pub fn stmt(&self) -> Option<&Stmt> {
        match &self.kind {
            AtomKind::Stmt(s) => Some(s),
            AtomKind::Cond(_) => None,
        }
    }

    pub fn cond(&self) -> Option<&Expr> {
        match &self.kind {
            AtomKind::Cond(e) => Some(e),
            AtomKind::Stmt(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BasicBlock {
    pub atoms: Vec<Atom>,
}

/// Blocks and edges are fixed once built; only atom contents may change.
#[derive(Debug, Clone)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<Edge>,
    pub entry: BlockId,
    pub exit: BlockId,
    dom: OnceLock<DomTree>,
    in_edges: OnceLock<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone)]
struct DomTree {
    idom: Vec<Option<BlockId>>,
    // preorder entry and exit numbers in the dominator tree
    enter: Vec<usize>,
    exit: Vec<usize>,
}

impl PartialEq for Cfg {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks && self.edges == other.edges && self.entry == other.entry && self.exit == other.exit
    }
}

impl Cfg {
    pub fn successors(&self, b: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges.iter().filter(move |e| e.from == b).map(|e| e.to)
    }

    pub fn predecessors(&self, b: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges.iter().filter(move |e| e.to == b).map(|e| e.from)
    }

    /// Outgoing `(edge index, target)` pairs for every block.
    fn out_edges(&self) -> Vec<Vec<(usize, BlockId)>> {
        let mut out = vec![Vec::new(); self.blocks.len()];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.from].push((i, e.to));
        }
        out
    }

    /// Blocks reachable from `starts`, optionally pretending one block or one
    /// edge (by index) does not exist.
    pub fn reachable_from(&self, starts: &[BlockId], skip_block: Option<BlockId>, skip_edge: Option<usize>) -> Vec<bool> {
        let out = self.out_edges();
        let mut seen = vec![false; self.blocks.len()];
        let mut stack: Vec<BlockId> = starts.iter().copied().filter(|b| Some(*b) != skip_block).collect();
        while let Some(b) = stack.pop() {
            if seen[b] {
                continue;
            }
            seen[b] = true;
            for &(i, to) in &out[b] {
                if Some(i) != skip_edge && Some(to) != skip_block && !seen[to] {
                    stack.push(to);
                }
            }
        }
        seen
    }

    fn dom_tree(&self) -> &DomTree {
        self.dom.get_or_init(|| {
            let idom = self.compute_idom();
            let n = self.blocks.len();
            let mut children = vec![Vec::new(); n];
            for (b, d) in idom.iter().enumerate() {
                if let Some(d) = *d {
                    if b != self.entry {
                        children[d].push(b);
                    }
                }
            }
            let (mut enter, mut exit) = (vec![usize::MAX; n], vec![usize::MAX; n]);
            let mut clock = 0;
            let mut stack = vec![(self.entry, 0usize)];
            enter[self.entry] = 0;
            while let Some((b, next)) = stack.pop() {
                if let Some(&c) = children[b].get(next) {
                    stack.push((b, next + 1));
                    clock += 1;
                    enter[c] = clock;
                    stack.push((c, 0));
                } else {
                    exit[b] = clock;
                }
            }
            DomTree { idom, enter, exit }
        })
    }

    /// Immediate dominator of every live block (the entry maps to itself);
    /// `None` for dead blocks. Computed once.
    pub fn immediate_dominators(&self) -> &[Option<BlockId>] {
        &self.dom_tree().idom
    }

    /// True if `a` dominates `b`. Every live block dominates itself; dead
    /// blocks neither dominate nor are dominated.
    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        let t = self.dom_tree();
        t.idom[a].is_some() && t.idom[b].is_some() && t.enter[a] <= t.enter[b] && t.exit[b] <= t.exit[a]
    }

    /// Indices of the edges entering each block. Computed once.
    pub fn in_edges(&self, b: BlockId) -> &[usize] {
        let all = self.in_edges.get_or_init(|| {
            let mut v = vec![Vec::new(); self.blocks.len()];
            for (i, e) in self.edges.iter().enumerate() {
                v[e.to].push(i);
            }
            v
        });
        &all[b]
    }

    // iterative scheme of Cooper, Harvey and Kennedy
    fn compute_idom(&self) -> Vec<Option<BlockId>> {
        let n = self.blocks.len();
        let out = self.out_edges();
        // reverse postorder over live blocks
        let mut order = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        let mut stack = vec![(self.entry, 0usize)];
        visited[self.entry] = true;
        while let Some((b, next)) = stack.pop() {
            if let Some(&(_, to)) = out[b].get(next) {
                stack.push((b, next + 1));
                if !visited[to] {
                    visited[to] = true;
                    stack.push((to, 0));
                }
            } else {
                order.push(b);
            }
        }
        order.reverse();
        let mut rank = vec![usize::MAX; n];
        for (i, &b) in order.iter().enumerate() {
            rank[b] = i;
        }
        let mut preds = vec![Vec::new(); n];
        for e in &self.edges {
            if visited[e.from] {
                preds[e.to].push(e.from);
            }
        }
        let mut idom: Vec<Option<BlockId>> = vec![None; n];
        idom[self.entry] = Some(self.entry);
        let intersect = |idom: &[Option<BlockId>], mut a: BlockId, mut b: BlockId| {
            while a != b {
                while rank[a] > rank[b] {
                    a = idom[a].expect("processed");
                }
                while rank[b] > rank[a] {
                    b = idom[b].expect("processed");
                }
            }
            a
        };
        let mut changed = true;
        while changed {
            changed = false;
            for &b in order.iter().skip(1) {
                let mut new = None;
                for &p in &preds[b] {
                    if idom[p].is_some() {
                        new = Some(match new {
                            None => p,
                            Some(cur) => intersect(&idom, p, cur),
                        });
                    }
                }
                if new.is_some() && idom[b] != new {
                    idom[b] = new;
                    changed = true;
                }
            }
        }
        idom
    }


    /// Blocks reachable from entry; the rest are dead.
    pub fn live(&self) -> Vec<bool> {
        self.reachable_from(&[self.entry], None, None)
    }

    pub fn atom_count(&self) -> usize {
        self.blocks.iter().map(|b| b.atoms.len()).sum()
    }
}

struct LoopCtx {
    continue_to: BlockId,
    continue_kind: EdgeKind,
    breaks: Vec<BlockId>,
}

struct Builder {
    blocks: Vec<BasicBlock>,
    edges: Vec<Edge>,
    cur: Option<BlockId>,
    loops: Vec<LoopCtx>,
    returns: Vec<BlockId>,
}

impl Builder {
    fn new_block(&mut self) -> BlockId {
        self.blocks.push(BasicBlock::default());
        self.blocks.len() - 1
    }

    fn edge(&mut self, from: BlockId, to: BlockId, kind: EdgeKind) {
        self.edges.push(Edge { from, to, kind });
    }

    /// Current block, opening a fresh (dead) one after a jump.
    fn current(&mut self) -> BlockId {
        match self.cur {
            Some(b) => b,
            None => {
                let b = self.new_block();
                self.cur = Some(b);
                b
            }
        }
    }

    fn push_atom(&mut self, kind: AtomKind, span: Span) -> BlockId {
        let b = self.current();
        self.blocks[b].atoms.push(Atom::new(kind, span));
        b
    }

    /// New block with the given incoming edges, or `None` if there are none.
    fn join(&mut self, preds: &[(Option<BlockId>, EdgeKind)]) -> Option<BlockId> {
        if preds.iter().all(|(p, _)| p.is_none()) {
            return None;
        }
        let j = self.new_block();
        for (p, k) in preds {
            if let Some(p) = p {
                self.edge(*p, j, *k);
            }
        }
        Some(j)
    }

    fn block(&mut self, b: &Block) {
        for s in &b.stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Block(b) => self.block(b),
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.push_atom(AtomKind::Cond(cond.clone()), cond.span);
                let t = self.new_block();
                self.edge(c, t, EdgeKind::True);
                self.cur = Some(t);
                self.stmt(then_branch);
                let then_end = self.cur;
                match else_branch {
                    Some(e) => {
                        let f = self.new_block();
                        self.edge(c, f, EdgeKind::False);
                        self.cur = Some(f);
                        self.stmt(e);
                        let else_end = self.cur;
                        self.cur = self.join(&[(then_end, EdgeKind::Seq), (else_end, EdgeKind::Seq)]);
                    }
                    None => {
                        self.cur = self.join(&[(Some(c), EdgeKind::Seq), (then_end, EdgeKind::Seq)]);
                    }
                }
            }
            StmtKind::While { cond, body } => {
                let pre = self.current();
                let h = self.new_block();
                self.edge(pre, h, EdgeKind::Seq);
                self.blocks[h].atoms.push(Atom::new(AtomKind::Cond(cond.clone()), cond.span));
                let b = self.new_block();
                self.edge(h, b, EdgeKind::True);
                self.run_loop_body(body, b, h, EdgeKind::LoopBack);
                let body_end = self.cur;
                if let Some(e) = body_end {
                    self.edge(e, h, EdgeKind::LoopBack);
                }
                let ctx = self.loops.pop().expect("loop context");
                let mut preds = vec![(Some(h), EdgeKind::False)];
                preds.extend(ctx.breaks.iter().map(|b| (Some(*b), EdgeKind::Seq)));
                self.cur = self.join(&preds);
            }
            StmtKind::DoWhile { body, cond } => {
                let pre = self.current();
                let b = self.new_block();
                self.edge(pre, b, EdgeKind::Seq);
                let c = self.new_block();
                self.blocks[c].atoms.push(Atom::new(AtomKind::Cond(cond.clone()), cond.span));
                self.run_loop_body(body, b, c, EdgeKind::Seq);
                if let Some(e) = self.cur {
                    self.edge(e, c, EdgeKind::Seq);
                }
                self.edge(c, b, EdgeKind::LoopBack);
                let ctx = self.loops.pop().expect("loop context");
                let mut preds = vec![(Some(c), EdgeKind::False)];
                preds.extend(ctx.breaks.iter().map(|b| (Some(*b), EdgeKind::Seq)));
                self.cur = self.join(&preds);
            }
            StmtKind::For { init, cond, update, body } => {
                if let Some(i) = init {
                    self.stmt(i);
                }
                let pre = self.current();
                let h = self.new_block();
                self.edge(pre, h, EdgeKind::Seq);
                if let Some(c) = cond {
                    self.blocks[h].atoms.push(Atom::new(AtomKind::Cond(c.clone()), c.span));
                }
                let b = self.new_block();
                self.edge(h, b, if cond.is_some() { EdgeKind::True } else { EdgeKind::Seq });
                let (cont, cont_kind) = match update {
                    Some(_) => (self.new_block(), EdgeKind::Seq),
                    None => (h, EdgeKind::LoopBack),
                };
                self.run_loop_body(body, b, cont, cont_kind);
                if let Some(e) = self.cur {
                    self.edge(e, cont, cont_kind);
                }
                if let Some(u) = update {
                    let stmt = Stmt::new(StmtKind::Expr(u.clone()), u.span);
                    self.blocks[cont].atoms.push(Atom::new(AtomKind::Stmt(stmt), u.span));
                    self.edge(cont, h, EdgeKind::LoopBack);
                }
                let ctx = self.loops.pop().expect("loop context");
                let mut preds: Vec<(Option<BlockId>, EdgeKind)> = Vec::new();
                if cond.is_some() {
                    preds.push((Some(h), EdgeKind::False));
                }
                preds.extend(ctx.breaks.iter().map(|b| (Some(*b), EdgeKind::Seq)));
                self.cur = self.join(&preds);
            }
            StmtKind::Return(_) => {
                let b = self.push_atom(AtomKind::Stmt(s.clone()), s.span);
                self.returns.push(b);
                self.cur = None;
            }
            StmtKind::Revert(_) => {
                self.push_atom(AtomKind::Stmt(s.clone()), s.span);
                self.cur = None;
            }
            StmtKind::Break => {
                if let (Some(b), Some(ctx)) = (self.cur, self.loops.last_mut()) {
                    ctx.breaks.push(b);
                }
                self.cur = None;
            }
            StmtKind::Continue => {
                if let (Some(b), Some(ctx)) = (self.cur, self.loops.last()) {
                    let (to, kind) = (ctx.continue_to, ctx.continue_kind);
                    self.edge(b, to, kind);
                }
                self.cur = None;
            }
            StmtKind::Placeholder => {}
            StmtKind::Require { .. }
            | StmtKind::LocalDecl { .. }
            | StmtKind::Assign { .. }
            | StmtKind::Expr(_)
            | StmtKind::Emit(_)
            | StmtKind::Opaque { .. } => {
                self.push_atom(AtomKind::Stmt(s.clone()), s.span);
            }
        }
    }

    fn run_loop_body(&mut self, body: &Stmt, start: BlockId, continue_to: BlockId, continue_kind: EdgeKind) {
        self.loops.push(LoopCtx { continue_to, continue_kind, breaks: Vec::new() });
        self.cur = Some(start);
        self.stmt(body);
    }
}

pub fn build_cfg(body: &Block) -> Cfg {
    let mut b = Builder { blocks: Vec::new(), edges: Vec::new(), cur: None, loops: Vec::new(), returns: Vec::new() };
    let entry = b.new_block();
    b.cur = Some(entry);
    b.block(body);
    let exit = match b.cur {
        Some(c) if b.returns.is_empty() || b.blocks[c].atoms.is_empty() => c,
        Some(c) => {
            let x = b.new_block();
            b.edge(c, x, EdgeKind::Seq);
            x
        }
        None => b.new_block(),
    };
    for r in std::mem::take(&mut b.returns) {
        b.edge(r, exit, EdgeKind::Seq);
    }
    Cfg { blocks: b.blocks, edges: b.edges, entry, exit, dom: OnceLock::new(), in_edges: OnceLock::new() }
}
