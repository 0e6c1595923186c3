//! Minimal DAG construction by bottom-up sharing of repeated subtrees.

use std::collections::HashMap;

use smallvec::SmallVec;

use crate::grammar::{Grammar, NtId, ProdKind, Symbol};
use crate::xml_tree::{NodeId, Tree};

type Key = (Symbol, SmallVec<[Symbol; 2]>);

enum Seen {
    First(NodeId),
    Shared(NtId),
}

/// Builds the minimal DAG of `tree` as a grammar whose non-start
/// productions all have rank 0. Leaves are never shared.
pub fn build_dag(tree: &Tree) -> Grammar {
    let mut g = Grammar::from_tree(tree);
    if tree.is_empty() {
        return g;
    }
    let root = g.root(g.start());
    let order = postorder(&g, root);
    let mut processed = vec![false; g.capacity()];
    let mut table: HashMap<Key, Seen> = HashMap::new();
    for v in order {
        processed[v as usize] = true;
        share_subtree(&mut g, &mut table, &processed, v);
    }
    collapse_single_refs(&mut g);
    g
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

/// The sharing key of `v`, if all its children are leaves or references.
fn key_of(g: &Grammar, v: NodeId) -> Option<Key> {
    let cs = g.children(v);
    if cs.is_empty() {
        return None;
    }
    let mut syms = SmallVec::new();
    for &c in cs {
        if !g.children(c).is_empty() {
            return None;
        }
        syms.push(g.sym(c));
    }
    Some((g.sym(v), syms))
}

fn share_subtree(g: &mut Grammar, table: &mut HashMap<Key, Seen>, processed: &[bool], v: NodeId) {
    let mut work = vec![v];
    while let Some(v) = work.pop() {
        let Some(key) = key_of(g, v) else { continue };
        match table.get(&key) {
            None => {
                table.insert(key, Seen::First(v));
            }
            Some(&Seen::Shared(x)) => make_ref(g, v, x),
            Some(&Seen::First(first)) => {
                let x = g.add_production(0, ProdKind::Dag);
                let rhs = g.alloc(key.0);
                for &s in &key.1 {
                    let c = g.alloc(s);
                    g.push_child(rhs, c);
                }
                g.set_root(x, rhs);
                make_ref(g, first, x);
                make_ref(g, v, x);
                table.insert(key, Seen::Shared(x));
                // The first occurrence's parent was seen before it became a
                // reference and may be shareable now.
                if let Some(p) = g.parent(first) {
                    if processed[p as usize] {
                        work.push(p);
                    }
                }
            }
        }
    }
}

fn make_ref(g: &mut Grammar, v: NodeId, x: NtId) {
    for c in g.take_children(v) {
        g.free_node(c);
    }
    g.set_sym(v, Symbol::Nonterminal(x));
}

/// Inlines every non-start production that is referenced exactly once.
pub fn collapse_single_refs(g: &mut Grammar) {
    loop {
        let singles: Vec<NtId> = g
            .nonterminals()
            .into_iter()
            .filter(|&a| a != g.start() && g.ref_count(a) == 1)
            .collect();
        if singles.is_empty() {
            break;
        }
        for a in singles {
            if g.production(a).is_some() && g.ref_count(a) == 1 {
                g.eliminate(a);
            }
        }
    }
}

/// Edge count of the minimal DAG of `tree`.
pub fn minimal_dag_edges(tree: &Tree) -> usize {
    build_dag(tree).size()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_of(text: &str) -> Tree {
        Grammar::from_text(text).unwrap().unfold().unwrap()
    }

    #[test]
    fn shares_repeated_subtree() {
        let t = tree_of("S -> f(g(a,b,c),g(a,b,c))");
        let g = build_dag(&t);
        g.validate().unwrap();
        assert_eq!(g.num_nonterminals(), 2);
        assert!(g.canonical_text().contains("S -> f(A1,A1)"));
        assert!(g.canonical_text().contains("A1 -> g(a,b,c)"));
        assert!(g.unfold().unwrap().same_as(&t));
    }

    #[test]
    fn distinct_labels_not_shared() {
        let t = tree_of("S -> f(g(a),h(b))");
        let g = build_dag(&t);
        assert_eq!(g.num_nonterminals(), 1);
    }

    #[test]
    fn collapses_inner_shares() {
        let t = tree_of("S -> f(f(a,f(a,a)),f(a,f(a,a)))");
        let g = build_dag(&t);
        g.validate().unwrap();
        assert_eq!(g.canonical_text(), "A1 -> f(a,f(a,a))\nS -> f(A1,A1)\n");
    }

    #[test]
    fn perfect_tree_depth_four() {
        let t = tree_of("S -> f(A,A)\nA -> f(B,B)\nB -> f(C,C)\nC -> f(a,a)");
        let g = build_dag(&t);
        assert_eq!(g.num_nonterminals(), 4);
        assert_eq!(g.size(), 8);
    }
}
