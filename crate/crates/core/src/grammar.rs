//! Linear straight-line context-free tree grammars.
//!
//! All right-hand sides live in one node arena. Parameters carry no index:
//! the i-th parameter leaf of a right-hand side in preorder stands for y_i.

use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::fmt::Write as _;

use smallvec::SmallVec;
use thiserror::Error;

use crate::xml_tree::{Alphabet, Characteristic, NodeId, TermId, Terminal, Tree, NIL};

pub type NtId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Terminal(TermId),
    Nonterminal(NtId),
    Param,
}

/// How a production came to be. `Dag` productions are rank 0 and are
/// looked through by the digram index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProdKind {
    Start,
    Dag,
    Pattern,
}

#[derive(Clone, Debug)]
pub struct Production {
    pub rank: usize,
    pub root: NodeId,
    pub kind: ProdKind,
}

#[derive(Clone, Debug)]
pub struct GNode {
    pub sym: Symbol,
    pub parent: NodeId,
    pub children: SmallVec<[NodeId; 2]>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("unknown nonterminal {0}")]
    UnknownNonterminal(NtId),
    #[error("reference relation is cyclic")]
    Cyclic,
    #[error("invalid grammar: {0}")]
    Invalid(String),
    #[error("unfolded tree exceeds {0} nodes")]
    TooLarge(u64),
    #[error("cannot parse grammar text: {0}")]
    Syntax(String),
}

/// Default cap on the size of an unfolded tree.
pub const DEFAULT_UNFOLD_CAP: u64 = 1 << 31;

#[derive(Clone, Debug)]
pub struct Grammar {
    pub alphabet: Alphabet,
    nodes: Vec<GNode>,
    free: Vec<NodeId>,
    prods: Vec<Option<Production>>,
    start: NtId,
    refs: Vec<Vec<NodeId>>,
    ref_pos: Vec<u32>,
    home: Vec<NtId>,
}

impl Grammar {
    /// An empty grammar whose start production (id 0) has no right-hand side yet.
    pub fn new(alphabet: Alphabet) -> Self {
        let mut g = Grammar {
            alphabet,
            nodes: Vec::new(),
            free: Vec::new(),
            prods: Vec::new(),
            start: 0,
            refs: Vec::new(),
            ref_pos: Vec::new(),
            home: Vec::new(),
        };
        g.start = g.add_production(0, ProdKind::Start);
        g
    }

    /// The one-production grammar S -> t.
    pub fn from_tree(tree: &Tree) -> Self {
        let mut g = Grammar::new(tree.alphabet.clone());
        if tree.is_empty() {
            return g;
        }
        let mut map = vec![NIL; tree.len()];
        for v in tree.preorder() {
            let n = g.alloc(Symbol::Terminal(tree.label(v)));
            map[v as usize] = n;
            if let Some(p) = tree.parent(v) {
                g.push_child(map[p as usize], n);
            }
        }
        let s = g.start;
        g.set_root(s, map[tree.root() as usize]);
        g
    }

    // ----- arena -----

    pub fn alloc(&mut self, sym: Symbol) -> NodeId {
        let node = GNode { sym: Symbol::Param, parent: NIL, children: SmallVec::new() };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                self.ref_pos.push(u32::MAX);
                self.home.push(NIL);
                (self.nodes.len() - 1) as NodeId
            }
        };
        self.set_sym(id, sym);
        id
    }

    /// Releases a single node. Its children are left untouched.
    pub fn free_node(&mut self, v: NodeId) {
        self.set_sym(v, Symbol::Param);
        let n = &mut self.nodes[v as usize];
        n.parent = NIL;
        n.children.clear();
        self.home[v as usize] = NIL;
        self.free.push(v);
    }

    /// Releases a whole subtree.
    pub fn free_subtree(&mut self, v: NodeId) {
        let mut stack = vec![v];
        while let Some(w) = stack.pop() {
            stack.extend(self.nodes[w as usize].children.iter().copied());
            self.free_node(w);
        }
    }

    /// Number of arena slots; node ids are below this bound.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, v: NodeId) -> &GNode {
        &self.nodes[v as usize]
    }

    pub fn sym(&self, v: NodeId) -> Symbol {
        self.nodes[v as usize].sym
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.nodes[v as usize].children
    }

    pub fn child(&self, v: NodeId, i: usize) -> NodeId {
        self.nodes[v as usize].children[i - 1]
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.nodes[v as usize].parent;
        (p != NIL).then_some(p)
    }

    /// 1-based position among the parent's children.
    pub fn index(&self, v: NodeId) -> Option<usize> {
        let p = self.parent(v)?;
        self.children(p).iter().position(|&c| c == v).map(|i| i + 1)
    }

    /// The production whose right-hand side root is `v`, if any.
    pub fn home(&self, v: NodeId) -> Option<NtId> {
        let h = self.home[v as usize];
        (h != NIL).then_some(h)
    }

    /// The production containing `v`.
    pub fn owner(&self, mut v: NodeId) -> NtId {
        while let Some(p) = self.parent(v) {
            v = p;
        }
        self.home[v as usize]
    }

    pub fn set_sym(&mut self, v: NodeId, sym: Symbol) {
        let old = self.nodes[v as usize].sym;
        if old == sym {
            return;
        }
        if let Symbol::Nonterminal(a) = old {
            let pos = self.ref_pos[v as usize] as usize;
            let list = &mut self.refs[a as usize];
            list.swap_remove(pos);
            if let Some(&moved) = list.get(pos) {
                self.ref_pos[moved as usize] = pos as u32;
            }
            self.ref_pos[v as usize] = u32::MAX;
        }
        if let Symbol::Nonterminal(a) = sym {
            let list = &mut self.refs[a as usize];
            self.ref_pos[v as usize] = list.len() as u32;
            list.push(v);
        }
        self.nodes[v as usize].sym = sym;
    }

    pub fn push_child(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[child as usize].parent = parent;
        self.nodes[parent as usize].children.push(child);
    }

    pub fn set_children(&mut self, parent: NodeId, children: SmallVec<[NodeId; 2]>) {
        for &c in &children {
            self.nodes[c as usize].parent = parent;
        }
        self.nodes[parent as usize].children = children;
    }

    pub fn take_children(&mut self, v: NodeId) -> SmallVec<[NodeId; 2]> {
        std::mem::take(&mut self.nodes[v as usize].children)
    }

    /// Puts `new` where `old` sits: in its parent's child list, or as the
    /// root of the production `old` is the root of. `old` is detached.
    pub fn replace_node(&mut self, old: NodeId, new: NodeId) {
        match self.parent(old) {
            Some(p) => {
                let pos = self.children(p).iter().position(|&c| c == old).expect("child");
                self.nodes[p as usize].children[pos] = new;
                self.nodes[new as usize].parent = p;
            }
            None => {
                let a = self.home[old as usize];
                if a != NIL {
                    self.set_root(a, new);
                }
                self.nodes[new as usize].parent = NIL;
            }
        }
        self.nodes[old as usize].parent = NIL;
        self.home[old as usize] = NIL;
    }

    // ----- productions -----

    pub fn add_production(&mut self, rank: usize, kind: ProdKind) -> NtId {
        let id = self.prods.len() as NtId;
        self.prods.push(Some(Production { rank, root: NIL, kind }));
        self.refs.push(Vec::new());
        id
    }

    pub fn set_root(&mut self, a: NtId, root: NodeId) {
        let p = self.prods[a as usize].as_mut().expect("live production");
        if p.root != NIL && self.home[p.root as usize] == a {
            self.home[p.root as usize] = NIL;
        }
        p.root = root;
        self.home[root as usize] = a;
        self.nodes[root as usize].parent = NIL;
    }

    /// Drops the production record; the caller owns its nodes.
    pub fn remove_production(&mut self, a: NtId) {
        if let Some(p) = self.prods[a as usize].take() {
            if p.root != NIL && self.home[p.root as usize] == a {
                self.home[p.root as usize] = NIL;
            }
        }
    }

    pub fn start(&self) -> NtId {
        self.start
    }

    pub fn production(&self, a: NtId) -> Option<&Production> {
        self.prods.get(a as usize).and_then(|p| p.as_ref())
    }

    pub fn prod(&self, a: NtId) -> &Production {
        self.production(a).expect("live production")
    }

    pub fn set_kind(&mut self, a: NtId, kind: ProdKind) {
        self.prods[a as usize].as_mut().expect("live production").kind = kind;
    }

    pub fn root(&self, a: NtId) -> NodeId {
        self.prod(a).root
    }

    pub fn is_dag(&self, a: NtId) -> bool {
        matches!(self.production(a), Some(p) if p.kind == ProdKind::Dag)
    }

    /// Live nonterminal ids in creation order.
    pub fn nonterminals(&self) -> Vec<NtId> {
        (0..self.prods.len() as NtId).filter(|&a| self.prods[a as usize].is_some()).collect()
    }

    pub fn num_nonterminals(&self) -> usize {
        self.prods.iter().filter(|p| p.is_some()).count()
    }

    pub fn rank(&self, sym: Symbol) -> usize {
        match sym {
            Symbol::Terminal(t) => self.alphabet.get(t).rank,
            Symbol::Nonterminal(a) => self.prod(a).rank,
            Symbol::Param => 0,
        }
    }

    // ----- derived quantities -----

    /// Every node labeled `a`.
    pub fn ref_nodes(&self, a: NtId) -> &[NodeId] {
        &self.refs[a as usize]
    }

    pub fn ref_count(&self, a: NtId) -> usize {
        self.refs[a as usize].len()
    }

    /// (containing production, node) for every reference to `a`.
    pub fn refs(&self, a: NtId) -> Result<Vec<(NtId, NodeId)>, GrammarError> {
        if self.production(a).is_none() {
            return Err(GrammarError::UnknownNonterminal(a));
        }
        Ok(self.refs[a as usize].iter().map(|&v| (self.owner(v), v)).collect())
    }

    /// Nodes of the subtree at `v` in preorder.
    pub fn subtree_preorder(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(w) = stack.pop() {
            out.push(w);
            stack.extend(self.children(w).iter().rev());
        }
        out
    }

    pub fn subtree_edges(&self, v: NodeId) -> usize {
        let mut count = 0;
        let mut stack = vec![v];
        while let Some(w) = stack.pop() {
            count += 1;
            stack.extend(self.children(w).iter().copied());
        }
        count - 1
    }

    pub fn rhs_size(&self, a: NtId) -> usize {
        self.subtree_edges(self.root(a))
    }

    /// |G|, the total number of edges over all right-hand sides.
    pub fn size(&self) -> usize {
        self.nonterminals().into_iter().map(|a| self.rhs_size(a)).sum()
    }

    /// |ref(A)| * (|t| - rank(A)) - |t|.
    pub fn sav(&self, a: NtId) -> i64 {
        assert_ne!(a, self.start, "sav is undefined for the start nonterminal");
        let t = self.rhs_size(a) as i64;
        self.ref_count(a) as i64 * (t - self.prod(a).rank as i64) - t
    }

    /// Nonterminals referenced in the right-hand side of `a`, with repetition.
    pub fn called(&self, a: NtId) -> Vec<NtId> {
        self.subtree_preorder(self.root(a))
            .into_iter()
            .filter_map(|v| match self.sym(v) {
                Symbol::Nonterminal(b) => Some(b),
                _ => None,
            })
            .collect()
    }

    /// Topological order in which every nonterminal comes after all
    /// nonterminals occurring in its right-hand side; the start symbol is
    /// last and ties go to the smaller id.
    pub fn hierarchical_order(&self) -> Result<Vec<NtId>, GrammarError> {
        let nts = self.nonterminals();
        let mut pending: HashMap<NtId, usize> = HashMap::new();
        let mut callers: HashMap<NtId, Vec<NtId>> = HashMap::new();
        for &a in &nts {
            let mut called = self.called(a);
            called.sort_unstable();
            called.dedup();
            pending.insert(a, called.len());
            for b in called {
                callers.entry(b).or_default().push(a);
            }
        }
        let mut ready: BinaryHeap<Reverse<NtId>> = nts
            .iter()
            .filter(|&&a| pending[&a] == 0 && a != self.start)
            .map(|&a| Reverse(a))
            .collect();
        let mut order = Vec::with_capacity(nts.len());
        let mut start_ready = pending.get(&self.start) == Some(&0);
        while let Some(Reverse(a)) = ready.pop() {
            order.push(a);
            for &c in callers.get(&a).map(Vec::as_slice).unwrap_or(&[]) {
                let n = pending.get_mut(&c).expect("known caller");
                *n -= 1;
                if *n == 0 {
                    if c == self.start {
                        start_ready = true;
                    } else {
                        ready.push(Reverse(c));
                    }
                }
            }
        }
        if self.production(self.start).is_some() {
            if !start_ready {
                return Err(GrammarError::Cyclic);
            }
            order.push(self.start);
        }
        if order.len() != nts.len() {
            return Err(GrammarError::Cyclic);
        }
        Ok(order)
    }

    // ----- elimination -----

    /// Replaces every reference to `a` by its right-hand side with the
    /// parameters substituted, then removes the production.
    pub fn eliminate(&mut self, a: NtId) {
        assert_ne!(a, self.start, "the start production cannot be eliminated");
        let root = self.root(a);
        let params: Vec<NodeId> = self
            .subtree_preorder(root)
            .into_iter()
            .filter(|&v| self.sym(v) == Symbol::Param)
            .collect();
        let sites: Vec<NodeId> = self.refs[a as usize].clone();
        self.remove_production(a);
        let Some((&last, rest)) = sites.split_last() else {
            self.free_subtree(root);
            return;
        };
        for &r in rest {
            let args = self.take_children(r);
            let copy = self.copy_with_args(root, &args);
            self.replace_node(r, copy);
            self.free_node(r);
        }
        // The last reference receives the original nodes.
        let args = self.take_children(last);
        for (p, arg) in params.iter().zip(args.iter()) {
            self.replace_node(*p, *arg);
            self.free_node(*p);
        }
        self.replace_node(last, root);
        self.free_node(last);
    }

    /// Copies the subtree at `src`, putting `args[i]` at the i-th parameter.
    pub fn copy_with_args(&mut self, src: NodeId, args: &[NodeId]) -> NodeId {
        let mut next_param = 0;
        let mut top = NIL;
        let mut stack = vec![(src, NIL)];
        while let Some((s, dst_parent)) = stack.pop() {
            let n = match self.sym(s) {
                Symbol::Param => {
                    let n = args[next_param];
                    next_param += 1;
                    n
                }
                sym => {
                    let n = self.alloc(sym);
                    let kids: SmallVec<[NodeId; 4]> = self.children(s).iter().copied().collect();
                    stack.extend(kids.iter().rev().map(|&c| (c, n)));
                    n
                }
            };
            if dst_parent == NIL {
                top = n;
                self.nodes[n as usize].parent = NIL;
            } else {
                self.push_child(dst_parent, n);
            }
        }
        top
    }

    // ----- unfolding -----

    pub fn unfold(&self) -> Result<Tree, GrammarError> {
        self.unfold_with_cap(DEFAULT_UNFOLD_CAP)
    }

    /// val(G): expands nonterminals until only terminals remain.
    pub fn unfold_with_cap(&self, cap: u64) -> Result<Tree, GrammarError> {
        let mut param_index = vec![u32::MAX; self.nodes.len()];
        for a in self.nonterminals() {
            let mut i = 0;
            for v in self.subtree_preorder(self.root(a)) {
                if self.sym(v) == Symbol::Param {
                    param_index[v as usize] = i;
                    i += 1;
                }
            }
        }
        let mut tree = Tree::new(self.alphabet.clone());
        // Each frame binds the parameters of one expanded nonterminal.
        let mut envs: Vec<SmallVec<[(NodeId, u32); 4]>> = vec![SmallVec::new()];
        let mut stack: Vec<(NodeId, u32, NodeId)> = vec![(self.root(self.start), 0, NIL)];
        let mut count: u64 = 0;
        while let Some((v, env, out_parent)) = stack.pop() {
            match self.sym(v) {
                Symbol::Terminal(t) => {
                    count += 1;
                    if count > cap {
                        return Err(GrammarError::TooLarge(cap));
                    }
                    let n = tree.add_node(t);
                    if out_parent == NIL {
                        tree.set_root(n);
                    } else {
                        tree.push_child(out_parent, n);
                    }
                    stack.extend(self.children(v).iter().rev().map(|&c| (c, env, n)));
                }
                Symbol::Nonterminal(b) => {
                    let frame = self.children(v).iter().map(|&c| (c, env)).collect();
                    envs.push(frame);
                    let id = (envs.len() - 1) as u32;
                    stack.push((self.root(b), id, out_parent));
                }
                Symbol::Param => {
                    let (arg, arg_env) = envs[env as usize][param_index[v as usize] as usize];
                    stack.push((arg, arg_env, out_parent));
                }
            }
        }
        Ok(tree)
    }

    // ----- validation -----

    pub fn validate(&self) -> Result<(), GrammarError> {
        let bad = |m: String| Err(GrammarError::Invalid(m));
        if self.production(self.start).is_none() {
            return bad("missing start production".into());
        }
        if self.prod(self.start).rank != 0 {
            return bad("start production has nonzero rank".into());
        }
        for a in self.nonterminals() {
            let p = self.prod(a);
            if p.root == NIL {
                return bad(format!("production {a} has no right-hand side"));
            }
            if self.sym(p.root) == Symbol::Param {
                return bad(format!("production {a} is a bare parameter"));
            }
            let mut params = 0;
            for v in self.subtree_preorder(p.root) {
                let sym = self.sym(v);
                if let Symbol::Nonterminal(b) = sym {
                    if self.production(b).is_none() {
                        return bad(format!("reference to removed nonterminal {b}"));
                    }
                    if b == self.start {
                        return bad("start symbol referenced".into());
                    }
                }
                if sym == Symbol::Param {
                    params += 1;
                }
                if self.children(v).len() != self.rank(sym) {
                    return bad(format!("node {v} in production {a} has wrong arity"));
                }
                for &c in self.children(v) {
                    if self.nodes[c as usize].parent != v {
                        return bad(format!("broken parent link at node {c}"));
                    }
                }
            }
            if params != p.rank {
                return bad(format!("production {a} has {params} parameters, rank {}", p.rank));
            }
            if a != self.start && self.ref_count(a) == 0 {
                return bad(format!("production {a} is unused"));
            }
        }
        self.hierarchical_order().map(|_| ())
    }

    // ----- text form -----

    fn term_name(&self, v: NodeId, names: &HashMap<NtId, String>) -> String {
        match self.sym(v) {
            Symbol::Terminal(t) => self.alphabet.get(t).to_string(),
            Symbol::Nonterminal(a) => names[&a].clone(),
            Symbol::Param => "y".into(),
        }
    }

    fn write_term(&self, out: &mut String, root: NodeId, names: &HashMap<NtId, String>) {
        enum Tok {
            Node(NodeId),
            Text(&'static str),
        }
        let mut stack = vec![Tok::Node(root)];
        while let Some(tok) = stack.pop() {
            match tok {
                Tok::Text(s) => out.push_str(s),
                Tok::Node(v) => {
                    out.push_str(&self.term_name(v, names));
                    let cs = self.children(v);
                    if !cs.is_empty() {
                        out.push('(');
                        stack.push(Tok::Text(")"));
                        for (i, &c) in cs.iter().enumerate().rev() {
                            stack.push(Tok::Node(c));
                            if i > 0 {
                                stack.push(Tok::Text(","));
                            }
                        }
                    }
                }
            }
        }
    }

    fn text_with_names(&self, order: &[NtId], names: &HashMap<NtId, String>) -> String {
        let mut out = String::new();
        for &a in order {
            let p = self.prod(a);
            out.push_str(&names[&a]);
            if p.rank > 0 {
                out.push('(');
                out.push_str(&vec!["y"; p.rank].join(","));
                out.push(')');
            }
            out.push_str(" -> ");
            self.write_term(&mut out, p.root, names);
            out.push('\n');
        }
        out
    }

    /// One production per line, start first, others by id: `A3(y) -> f(y,a)`.
    pub fn to_text(&self) -> String {
        let mut order = vec![self.start];
        order.extend(self.nonterminals().into_iter().filter(|&a| a != self.start));
        let names = order
            .iter()
            .map(|&a| (a, if a == self.start { "S".to_string() } else { format!("A{a}") }))
            .collect();
        self.text_with_names(&order, &names)
    }

    /// Text form with nonterminals renamed A1, A2, ... in hierarchical
    /// order, so grammars that differ only in numbering compare equal.
    pub fn canonical_text(&self) -> String {
        let order = self.hierarchical_order().expect("acyclic grammar");
        let mut names = HashMap::new();
        let mut k = 0;
        for &a in &order {
            let name = if a == self.start {
                "S".to_string()
            } else {
                k += 1;
                format!("A{k}")
            };
            names.insert(a, name);
        }
        self.text_with_names(&order, &names)
    }

    /// Parses the text form. Lines look like `A(y,y) -> f(y,B(a,y))`.
    /// Left-hand side names are nonterminals, `y` is the parameter and every
    /// other name a terminal: `name^xy` is a binary-model terminal with
    /// characteristic `xy`, a bare name gets its arity as rank. The
    /// production named `S` (or else the first one) is the start.
    pub fn from_text(text: &str) -> Result<Grammar, GrammarError> {
        let err = |m: String| GrammarError::Syntax(m);
        let mut lines = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| err(format!("missing '->': {line}")))?;
            let lhs = lhs.trim();
            let (name, rank) = match lhs.split_once('(') {
                Some((n, rest)) => {
                    let inner = rest.strip_suffix(')').ok_or_else(|| err(lhs.into()))?;
                    let ys: Vec<&str> = inner.split(',').map(str::trim).collect();
                    if ys.iter().any(|&y| y != "y") {
                        return Err(err(format!("left-hand side parameters must be y: {lhs}")));
                    }
                    (n.trim().to_string(), ys.len())
                }
                None => (lhs.to_string(), 0),
            };
            lines.push((name, rank, rhs.trim().to_string()));
        }
        if lines.is_empty() {
            return Err(err("no productions".into()));
        }
        let start_line = lines.iter().position(|(n, _, _)| n == "S").unwrap_or(0);
        let mut g = Grammar::new(Alphabet::new());
        let mut ids: HashMap<String, NtId> = HashMap::new();
        ids.insert(lines[start_line].0.clone(), g.start);
        for (i, (name, rank, _)) in lines.iter().enumerate() {
            if i == start_line {
                if *rank != 0 {
                    return Err(err("start production must have rank 0".into()));
                }
                continue;
            }
            if ids.contains_key(name) {
                return Err(err(format!("duplicate production {name}")));
            }
            let id = g.add_production(*rank, ProdKind::Pattern);
            ids.insert(name.clone(), id);
        }
        for (name, _, rhs) in &lines {
            let root = g.parse_term(rhs, &ids)?;
            let a = ids[name];
            g.set_root(a, root);
        }
        g.validate().map_err(|e| err(e.to_string()))?;
        Ok(g)
    }

    fn parse_term(&mut self, s: &str, ids: &HashMap<String, NtId>) -> Result<NodeId, GrammarError> {
        let err = |m: &str| GrammarError::Syntax(format!("{m} in '{s}'"));
        let bytes = s.as_bytes();
        let mut pos = 0;
        // (name, children) frames of open applications.
        let mut stack: Vec<(String, Vec<NodeId>)> = Vec::new();
        let mut result = None;
        let is_name = |b: u8| !matches!(b, b'(' | b')' | b',') && !b.is_ascii_whitespace();
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let begin = pos;
            while pos < bytes.len() && is_name(bytes[pos]) {
                pos += 1;
            }
            if begin == pos {
                return Err(err("expected a name"));
            }
            let name = s[begin..pos].to_string();
            if pos < bytes.len() && bytes[pos] == b'(' {
                pos += 1;
                stack.push((name, Vec::new()));
                continue;
            }
            let mut node = self.make_node(&name, Vec::new(), ids)?;
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                match bytes.get(pos) {
                    Some(b',') => {
                        pos += 1;
                        stack.last_mut().ok_or_else(|| err("stray ','"))?.1.push(node);
                        break;
                    }
                    Some(b')') => {
                        pos += 1;
                        let (n, mut kids) = stack.pop().ok_or_else(|| err("stray ')'"))?;
                        kids.push(node);
                        node = self.make_node(&n, kids, ids)?;
                    }
                    None => {
                        if !stack.is_empty() {
                            return Err(err("unbalanced parentheses"));
                        }
                        result = Some(node);
                        break;
                    }
                    Some(_) => return Err(err("unexpected character")),
                }
            }
            if let Some(r) = result {
                return Ok(r);
            }
        }
    }

    fn make_node(
        &mut self,
        name: &str,
        kids: Vec<NodeId>,
        ids: &HashMap<String, NtId>,
    ) -> Result<NodeId, GrammarError> {
        let sym = if name == "y" {
            Symbol::Param
        } else if let Some(&a) = ids.get(name) {
            Symbol::Nonterminal(a)
        } else {
            let term = match name.rsplit_once('^') {
                Some((base, sup)) if sup.len() == 2 => {
                    let bits = u8::from_str_radix(sup, 2)
                        .map_err(|_| GrammarError::Syntax(format!("bad superscript in {name}")))?;
                    let ch = Characteristic::from_bits(bits).expect("two-bit value");
                    Terminal::binary(base, ch)
                }
                _ => Terminal::ranked(name, kids.len()),
            };
            Symbol::Terminal(self.alphabet.intern(term))
        };
        let v = self.alloc(sym);
        for c in kids {
            self.push_child(v, c);
        }
        Ok(v)
    }

    /// A short human-readable summary used by the CLI.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{} nonterminals, {} edges", self.num_nonterminals(), self.size());
        s
    }
}
