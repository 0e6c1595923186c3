//! The replacement step: repeatedly replace a most frequent digram by a
//! fresh nonterminal until no digram occurs twice within the rank bound.

use smallvec::SmallVec;

use crate::digram_index::{Digram, DigramIndex};
use crate::grammar::{Grammar, NtId, ProdKind, Symbol};
use crate::xml_tree::NodeId;

/// Creates the production A -> pat(α) and returns A.
pub fn pattern_production(g: &mut Grammar, d: &Digram) -> NtId {
    let a = g.add_production(d.par(g), ProdKind::Pattern);
    let root = g.alloc(d.parent);
    for k in 1..=g.rank(d.parent) as u32 {
        let c = if k == d.index {
            let c = g.alloc(d.child);
            for _ in 0..g.rank(d.child) {
                let y = g.alloc(Symbol::Param);
                g.push_child(c, y);
            }
            c
        } else {
            g.alloc(Symbol::Param)
        };
        g.push_child(root, c);
    }
    g.set_root(a, root);
    a
}

/// Replaces the occurrence of `d` at (v, j) by a node labeled `a`.
///
/// When the j-th child references a DAG production X, the occurrence spans
/// two productions. If X is referenced once it is inlined first. Otherwise
/// the children of X's root are moved into fresh rank-0 productions that
/// both X and the new node reference.
pub fn replace_occurrence(g: &mut Grammar, idx: &mut DigramIndex, v: NodeId, j: usize, a: NtId) {
    let c = g.child(v, j);
    let dag_child = match g.sym(c) {
        Symbol::Nonterminal(x) if g.is_dag(x) => Some(x),
        _ => None,
    };
    let w = match dag_child {
        Some(x) => g.root(x),
        None => c,
    };
    idx.remove_absorbed(g, v, w);

    let old = g.take_children(v);
    let mut children: SmallVec<[NodeId; 2]> = old[..j - 1].iter().copied().collect();
    match dag_child {
        None => {
            children.extend(g.take_children(w));
            g.free_node(w);
        }
        Some(x) if g.ref_count(x) == 1 => {
            children.extend(g.take_children(w));
            g.remove_production(x);
            g.free_node(w);
            g.free_node(c);
        }
        Some(_) => {
            let wv = idx.weight(v);
            let wh = idx.weight(w) - wv;
            let kids: SmallVec<[NodeId; 2]> = g.children(w).iter().copied().collect();
            for k in kids {
                let target = match g.sym(k) {
                    Symbol::Nonterminal(y) if g.is_dag(y) => y,
                    _ => {
                        let b = g.add_production(0, ProdKind::Dag);
                        let r = g.alloc(Symbol::Nonterminal(b));
                        g.replace_node(k, r);
                        g.set_root(b, k);
                        idx.prepare_node(r, 0, wh);
                        b
                    }
                };
                let r = g.alloc(Symbol::Nonterminal(target));
                idx.prepare_node(r, 0, wv);
                children.push(r);
            }
            g.free_node(c);
            idx.set_weight(w, wh);
            for &k in g.children(w) {
                idx.set_weight(k, wh);
            }
            idx.add_child_edges(g, w);
        }
    }
    children.extend(old[j..].iter().copied());
    let n = children.len();
    g.set_sym(v, Symbol::Nonterminal(a));
    g.set_children(v, children);
    let wv = idx.weight(v);
    idx.prepare_node(v, n, wv);
    idx.add_new(g, v);
}

/// One iteration of the replacement loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    /// The pattern nonterminal introduced.
    pub nonterminal: NtId,
    /// Frequency of the digram when it was chosen.
    pub frequency: u64,
}

/// Runs the replacement loop and reports its iterations in order.
/// `max_rank` of `None` means unbounded.
pub fn run_replacement(g: &mut Grammar, max_rank: Option<usize>, dag: bool) -> Vec<Step> {
    let mut idx = DigramIndex::build(g, max_rank, dag);
    run_with_index(g, &mut idx)
}

pub fn run_with_index(g: &mut Grammar, idx: &mut DigramIndex) -> Vec<Step> {
    let mut created = Vec::new();
    while let Some(d) = idx.pop() {
        let key = idx.key(d);
        let frequency = idx.frequency(d);
        let a = pattern_production(g, &key);
        created.push(Step { nonterminal: a, frequency });
        while let Some(occ) = idx.head(d) {
            replace_occurrence(g, idx, occ.node, occ.index as usize, a);
        }
        idx.requeue(d);
    }
    created
}
