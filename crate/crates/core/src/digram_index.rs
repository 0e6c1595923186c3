//! Occurrence lists for digrams with a bucketed priority queue.
//!
//! An occurrence of a digram (a, i, b) is stored at the node labeled `a`,
//! in the link slot of its i-th child. Every node carries one slot per
//! child, so list operations never allocate. Digram lists are kept in
//! buckets by exact frequency below a threshold and in one unsorted top
//! list above it.
//!
//! In DAG mode, a child that references a rank-0 DAG production is looked
//! through to the root label of that production, and every occurrence is
//! weighted by how often its node occurs in the unfolded tree.

use std::collections::HashMap;

use smallvec::SmallVec;

use crate::grammar::{Grammar, NtId, ProdKind, Symbol};
use crate::xml_tree::{NodeId, NIL};

pub type DigramId = u32;
const NONE: u32 = u32::MAX;

/// A digram (parent, index, child); `index` is 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Digram {
    pub parent: Symbol,
    pub index: u32,
    pub child: Symbol,
}

impl Digram {
    /// par(α) = rank(parent) + rank(child) - 1.
    pub fn par(&self, g: &Grammar) -> usize {
        g.rank(self.parent) + g.rank(self.child) - 1
    }
}

/// An occurrence: the parent node and the child index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occ {
    pub node: NodeId,
    pub index: u32,
}

const NO_OCC: Occ = Occ { node: NIL, index: 0 };

#[derive(Clone, Copy, Debug)]
struct Slot {
    digram: DigramId,
    prev: Occ,
    next: Occ,
}

const EMPTY_SLOT: Slot = Slot { digram: NONE, prev: NO_OCC, next: NO_OCC };

#[derive(Clone, Debug)]
struct Record {
    key: Digram,
    freq: u64,
    first: Occ,
    last: Occ,
    list: u32,
    prev: DigramId,
    next: DigramId,
    queued: bool,
}

#[derive(Clone, Debug)]
pub struct DigramIndex {
    slots: Vec<SmallVec<[Slot; 2]>>,
    weight: Vec<u64>,
    records: Vec<Record>,
    table: HashMap<Digram, DigramId>,
    heads: Vec<DigramId>,
    tails: Vec<DigramId>,
    threshold: u64,
    cursor: usize,
    max_rank: usize,
    dag: bool,
}

impl DigramIndex {
    /// Indexes the start production and, in DAG mode, every DAG production.
    /// `max_rank` bounds par(α) for the digrams kept; `None` is unbounded.
    pub fn build(g: &Grammar, max_rank: Option<usize>, dag: bool) -> Self {
        let mut usage: HashMap<NtId, u64> = HashMap::new();
        let mut weight = vec![0u64; g.capacity()];
        let mut indexed: Vec<NtId> = Vec::new();
        let mut unfolded_nodes: u64 = 0;
        let order = g.hierarchical_order().expect("acyclic grammar");
        usage.insert(g.start(), 1);
        for &a in order.iter().rev() {
            let kind = g.prod(a).kind;
            let is_indexed = a == g.start() || (dag && kind == ProdKind::Dag);
            if !is_indexed {
                continue;
            }
            indexed.push(a);
            let u = usage.get(&a).copied().unwrap_or(0);
            for v in g.subtree_preorder(g.root(a)) {
                weight[v as usize] = u;
                match g.sym(v) {
                    Symbol::Nonterminal(x) if g.is_dag(x) => {
                        *usage.entry(x).or_insert(0) += u;
                    }
                    _ => unfolded_nodes += u,
                }
            }
        }
        let n = unfolded_nodes.saturating_sub(1);
        let threshold = ((n as f64).sqrt().floor() as u64).max(2);
        let mut idx = DigramIndex {
            slots: vec![SmallVec::new(); g.capacity()],
            weight,
            records: Vec::new(),
            table: HashMap::new(),
            heads: vec![NONE; threshold as usize + 1],
            tails: vec![NONE; threshold as usize + 1],
            threshold,
            cursor: 0,
            max_rank: max_rank.unwrap_or(usize::MAX),
            dag,
        };
        indexed.sort_unstable();
        for &a in &indexed {
            for v in g.subtree_preorder(g.root(a)) {
                idx.slots[v as usize] = SmallVec::from_elem(EMPTY_SLOT, g.children(v).len());
            }
        }
        for &a in &indexed {
            for v in postorder(g, g.root(a)) {
                if let (Some(p), Some(i)) = (g.parent(v), g.index(v)) {
                    idx.add_occ(g, p, i as u32);
                }
            }
        }
        idx
    }

    /// Bucket threshold ⌊√n⌋ (at least 2); frequencies at or above it go to the top list.
    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn weight(&self, v: NodeId) -> u64 {
        self.weight[v as usize]
    }

    pub fn set_weight(&mut self, v: NodeId, w: u64) {
        self.weight[v as usize] = w;
    }

    /// Makes room for a node allocated after the index was built and
    /// gives it empty slots.
    pub fn prepare_node(&mut self, v: NodeId, children: usize, weight: u64) {
        let need = v as usize + 1;
        if self.slots.len() < need {
            self.slots.resize(need, SmallVec::new());
            self.weight.resize(need, 0);
        }
        self.slots[v as usize] = SmallVec::from_elem(EMPTY_SLOT, children);
        self.weight[v as usize] = weight;
    }

    pub fn key(&self, d: DigramId) -> Digram {
        self.records[d as usize].key
    }

    pub fn frequency(&self, d: DigramId) -> u64 {
        self.records[d as usize].freq
    }

    pub fn lookup(&self, d: &Digram) -> Option<DigramId> {
        self.table.get(d).copied()
    }

    /// Frequency of a digram, 0 if unknown.
    pub fn frequency_of(&self, d: &Digram) -> u64 {
        self.lookup(d).map_or(0, |id| self.frequency(id))
    }

    /// All digrams with nonzero frequency, in creation order.
    pub fn digrams(&self) -> Vec<(Digram, u64)> {
        self.records.iter().filter(|r| r.freq > 0).map(|r| (r.key, r.freq)).collect()
    }

    pub fn head(&self, d: DigramId) -> Option<Occ> {
        let f = self.records[d as usize].first;
        (f.node != NIL).then_some(f)
    }

    /// Occurrences of `d` in list order.
    pub fn occurrences(&self, d: DigramId) -> Vec<Occ> {
        let mut out = Vec::new();
        let mut cur = self.records[d as usize].first;
        while cur.node != NIL {
            out.push(cur);
            cur = self.slot(cur).next;
        }
        out
    }

    /// The digram registered at slot (v, i), if any.
    pub fn registered(&self, v: NodeId, i: u32) -> Option<DigramId> {
        let d = self.slots.get(v as usize)?.get(i as usize - 1)?.digram;
        (d != NONE).then_some(d)
    }

    fn slot(&self, o: Occ) -> &Slot {
        &self.slots[o.node as usize][o.index as usize - 1]
    }

    fn slot_mut(&mut self, o: Occ) -> &mut Slot {
        &mut self.slots[o.node as usize][o.index as usize - 1]
    }

    /// The digram at (v, i) with DAG references looked through, or `None`
    /// when it is not tracked: it exceeds the rank bound, or it spans two
    /// productions with equal parent and child symbols.
    pub fn slot_digram(&self, g: &Grammar, v: NodeId, i: u32) -> Option<Digram> {
        let c = g.child(v, i as usize);
        let (child, cross) = match g.sym(c) {
            Symbol::Nonterminal(x) if self.dag && g.is_dag(x) => (g.sym(g.root(x)), true),
            s => (s, false),
        };
        let parent = g.sym(v);
        if cross && parent == child {
            return None;
        }
        let d = Digram { parent, index: i, child };
        (d.par(g) <= self.max_rank).then_some(d)
    }

    /// Registers the occurrence at (v, i) unless it is untracked, already
    /// registered, or overlaps a registered occurrence of the same digram.
    pub fn add_occ(&mut self, g: &Grammar, v: NodeId, i: u32) {
        if self.registered(v, i).is_some() {
            return;
        }
        let Some(key) = self.slot_digram(g, v, i) else { return };
        let existing = self.table.get(&key).copied();
        if key.parent == key.child {
            if let Some(id) = existing {
                let c = g.child(v, i as usize);
                if self.registered(c, i) == Some(id) {
                    return;
                }
                if let (Some(p), Some(k)) = (g.parent(v), g.index(v)) {
                    if k as u32 == i && self.registered(p, i) == Some(id) {
                        return;
                    }
                }
            }
        }
        let id = match existing {
            Some(id) => id,
            None => {
                let id = self.records.len() as DigramId;
                self.records.push(Record {
                    key,
                    freq: 0,
                    first: NO_OCC,
                    last: NO_OCC,
                    list: NONE,
                    prev: NONE,
                    next: NONE,
                    queued: true,
                });
                self.table.insert(key, id);
                id
            }
        };
        let occ = Occ { node: v, index: i };
        let last = self.records[id as usize].last;
        *self.slot_mut(occ) = Slot { digram: id, prev: last, next: NO_OCC };
        if last.node == NIL {
            self.records[id as usize].first = occ;
        } else {
            self.slot_mut(last).next = occ;
        }
        let w = self.weight[v as usize];
        let r = &mut self.records[id as usize];
        r.last = occ;
        r.freq += w;
        self.rebucket(id);
    }

    /// Unregisters the occurrence at (v, i) if there is one.
    pub fn remove_occ(&mut self, v: NodeId, i: u32) {
        let Some(id) = self.registered(v, i) else { return };
        let occ = Occ { node: v, index: i };
        let Slot { prev, next, .. } = *self.slot(occ);
        if prev.node == NIL {
            self.records[id as usize].first = next;
        } else {
            self.slot_mut(prev).next = next;
        }
        if next.node == NIL {
            self.records[id as usize].last = prev;
        } else {
            self.slot_mut(next).prev = prev;
        }
        *self.slot_mut(occ) = EMPTY_SLOT;
        let w = self.weight[v as usize];
        self.records[id as usize].freq -= w;
        self.rebucket(id);
    }

    /// Removes the occurrences absorbed by replacing the occurrence at
    /// (v, j) whose child node (looked through) is `w`: the edge above `v`
    /// (one per reference when `v` roots a DAG production) and every child
    /// edge of `v` and of `w`.
    pub fn remove_absorbed(&mut self, g: &Grammar, v: NodeId, w: NodeId) {
        self.for_parent_edges(g, v, |idx, p, i| idx.remove_occ(p, i));
        for i in 1..=g.children(v).len() as u32 {
            self.remove_occ(v, i);
        }
        for i in 1..=g.children(w).len() as u32 {
            self.remove_occ(w, i);
        }
    }

    /// Adds the occurrences around a freshly created node `u`.
    pub fn add_new(&mut self, g: &Grammar, u: NodeId) {
        self.add_child_edges(g, u);
        self.for_parent_edges(g, u, |idx, p, i| idx.add_occ(g, p, i));
    }

    pub fn add_child_edges(&mut self, g: &Grammar, u: NodeId) {
        for i in 1..=g.children(u).len() as u32 {
            self.add_occ(g, u, i);
        }
    }

    fn for_parent_edges(&mut self, g: &Grammar, v: NodeId, mut f: impl FnMut(&mut Self, NodeId, u32)) {
        if let (Some(p), Some(i)) = (g.parent(v), g.index(v)) {
            f(self, p, i as u32);
            return;
        }
        if !self.dag {
            return;
        }
        if let Some(x) = g.home(v) {
            if g.is_dag(x) {
                for &r in g.ref_nodes(x) {
                    if let (Some(p), Some(i)) = (g.parent(r), g.index(r)) {
                        f(self, p, i as u32);
                    }
                }
            }
        }
    }

    fn list_of(&self, freq: u64) -> u32 {
        freq.min(self.threshold) as u32
    }

    fn rebucket(&mut self, id: DigramId) {
        let r = &self.records[id as usize];
        if !r.queued {
            return;
        }
        let target = self.list_of(r.freq);
        if r.list == target {
            return;
        }
        self.unlink(id);
        self.append(id, target);
    }

    fn unlink(&mut self, id: DigramId) {
        let Record { list, prev, next, .. } = self.records[id as usize];
        if list == NONE {
            return;
        }
        if prev == NONE {
            self.heads[list as usize] = next;
        } else {
            self.records[prev as usize].next = next;
        }
        if next == NONE {
            self.tails[list as usize] = prev;
        } else {
            self.records[next as usize].prev = prev;
        }
        let r = &mut self.records[id as usize];
        r.list = NONE;
        r.prev = NONE;
        r.next = NONE;
    }

    fn append(&mut self, id: DigramId, list: u32) {
        let tail = self.tails[list as usize];
        {
            let r = &mut self.records[id as usize];
            r.list = list;
            r.prev = tail;
            r.next = NONE;
        }
        if tail == NONE {
            self.heads[list as usize] = id;
        } else {
            self.records[tail as usize].next = id;
        }
        self.tails[list as usize] = id;
        if (list as u64) < self.threshold {
            self.cursor = self.cursor.max(list as usize);
        }
    }

    /// Takes a most frequent digram with frequency at least 2 out of the
    /// queue. Ties go to the digram that entered its list first.
    pub fn pop(&mut self) -> Option<DigramId> {
        let top = self.threshold as usize;
        let mut best = NONE;
        let mut cur = self.heads[top];
        while cur != NONE {
            let r = &self.records[cur as usize];
            if best == NONE || r.freq > self.records[best as usize].freq {
                best = cur;
            }
            cur = r.next;
        }
        if best == NONE {
            while self.cursor >= 2 {
                if self.heads[self.cursor] != NONE {
                    best = self.heads[self.cursor];
                    break;
                }
                self.cursor -= 1;
            }
        }
        if best == NONE {
            return None;
        }
        self.unlink(best);
        self.records[best as usize].queued = false;
        Some(best)
    }

    /// Puts a popped digram back under bucket management.
    pub fn requeue(&mut self, id: DigramId) {
        self.records[id as usize].queued = true;
        self.rebucket(id);
    }

    /// Checks list links, frequencies and bucket placement.
    pub fn check_consistency(&self, g: &Grammar) -> Result<(), String> {
        for (id, r) in self.records.iter().enumerate() {
            let mut sum = 0;
            for o in self.occurrences(id as DigramId) {
                if self.slot(o).digram != id as DigramId {
                    return Err(format!("slot ({}, {}) not tagged with its digram", o.node, o.index));
                }
                if self.slot_digram(g, o.node, o.index) != Some(r.key) {
                    return Err(format!("occurrence ({}, {}) no longer matches", o.node, o.index));
                }
                sum += self.weight[o.node as usize];
            }
            if sum != r.freq {
                return Err(format!("digram {id}: frequency {} but weights sum to {sum}", r.freq));
            }
            if r.queued && r.list != self.list_of(r.freq) {
                return Err(format!("digram {id} with frequency {} is in list {}", r.freq, r.list));
            }
        }
        Ok(())
    }
}

fn postorder(g: &Grammar, root: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![(root, false)];
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            out.push(v);
        } else {
            stack.push((v, true));
            stack.extend(g.children(v).iter().rev().map(|&c| (c, false)));
        }
    }
    out
}

/// The postorder greedy occurrence set of `d` in a single tree: a node is
/// taken when it matches and its i-th child was not taken.
pub fn compute_occurrences(tree: &crate::xml_tree::Tree, parent: u32, index: usize, child: u32) -> Vec<NodeId> {
    let mut chosen = vec![false; tree.len()];
    let mut out = Vec::new();
    for v in tree.postorder() {
        if tree.label(v) != parent {
            continue;
        }
        let Some(&c) = tree.children(v).get(index - 1) else { continue };
        if tree.label(c) != child || chosen[c as usize] {
            continue;
        }
        chosen[v as usize] = true;
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digram(g: &Grammar, p: &str, i: u32, c: &str) -> Digram {
        let find = |name: &str| {
            let (id, _) = g.alphabet.iter().find(|(_, t)| t.to_string() == name).expect(name);
            Symbol::Terminal(id)
        };
        Digram { parent: find(p), index: i, child: find(c) }
    }

    #[test]
    fn chain_of_equal_symbols() {
        let g = Grammar::from_text("S -> f(f(f(a)))").unwrap();
        let idx = DigramIndex::build(&g, None, false);
        assert_eq!(idx.frequency_of(&digram(&g, "f", 1, "f")), 1);
        idx.check_consistency(&g).unwrap();
    }

    #[test]
    fn dag_weights_count_unfolded_copies() {
        let g = Grammar::from_text("S -> f(f(b,A),f(c,A))\nA -> f(a,f(a,f(a,a)))").unwrap();
        let mut g = g;
        g.set_kind(1, ProdKind::Dag);
        let idx = DigramIndex::build(&g, None, true);
        assert_eq!(idx.frequency_of(&digram(&g, "f", 2, "f")), 3);
        idx.check_consistency(&g).unwrap();
        let flat = Grammar::from_tree(&g.unfold().unwrap());
        let idx = DigramIndex::build(&flat, None, false);
        assert_eq!(idx.frequency_of(&digram(&flat, "f", 2, "f")), 4);
    }

    #[test]
    fn cross_production_occurrences_seen() {
        let mut g = Grammar::from_text("S -> f(A,A)\nA -> g(a,b,c)").unwrap();
        g.set_kind(1, ProdKind::Dag);
        let idx = DigramIndex::build(&g, None, true);
        assert_eq!(idx.frequency_of(&digram(&g, "f", 1, "g")), 1);
        assert_eq!(idx.frequency_of(&digram(&g, "f", 2, "g")), 1);
        assert_eq!(idx.frequency_of(&digram(&g, "g", 1, "a")), 2);
    }

    #[test]
    fn rank_bound_filters() {
        let g = Grammar::from_text("S -> f(g(a,b),g(a,b))").unwrap();
        let idx = DigramIndex::build(&g, Some(1), false);
        assert_eq!(idx.frequency_of(&digram(&g, "f", 1, "g")), 0);
        assert_eq!(idx.frequency_of(&digram(&g, "g", 1, "a")), 2);
    }

    #[test]
    fn pop_prefers_higher_frequency() {
        let g = Grammar::from_text("S -> h(g(a,b),g(a,b),g(a,b),g(a,c))").unwrap();
        let mut idx = DigramIndex::build(&g, None, false);
        let d = idx.pop().unwrap();
        assert_eq!(idx.key(d), digram(&g, "g", 1, "a"));
        assert_eq!(idx.frequency(d), 4);
        let d = idx.pop().unwrap();
        assert_eq!(idx.frequency(d), 3);
        assert!(idx.pop().is_none());
    }

    #[test]
    fn empty_index_pops_nothing() {
        let g = Grammar::from_text("S -> f(a,b)").unwrap();
        let mut idx = DigramIndex::build(&g, None, false);
        assert!(idx.pop().is_none());
    }
}
