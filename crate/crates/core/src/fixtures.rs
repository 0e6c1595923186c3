//! Generators for the analytical tree families.

use crate::xml_tree::{Alphabet, Characteristic, NodeId, Terminal, Tree};

const INTERNAL: Characteristic = Characteristic::TwoChildren;
const LEAF: Characteristic = Characteristic::NoChildren;

/// Builds a perfect binary tree of the given depth with `f` inner nodes;
/// `leaf(k)` names the k-th leaf from the left.
fn perfect(depth: u32, leaf: impl Fn(usize) -> String) -> Tree {
    let mut al = Alphabet::new();
    let f = al.intern(Terminal::binary("f", INTERNAL));
    let mut t = Tree::new(al);
    let root = t.add_node(f);
    t.set_root(root);
    let mut next_leaf = 0;
    // (node, remaining depth below it)
    let mut stack: Vec<(NodeId, u32)> = vec![(root, depth)];
    while let Some((v, d)) = stack.pop() {
        if d == 0 {
            continue;
        }
        let mut kids = [0; 2];
        for k in &mut kids {
            let label = if d == 1 {
                let name = leaf(next_leaf);
                next_leaf += 1;
                t.alphabet.intern(Terminal::binary(name, LEAF))
            } else {
                f
            };
            *k = t.add_node(label);
            t.push_child(v, *k);
        }
        stack.push((kids[1], d - 1));
        stack.push((kids[0], d - 1));
    }
    t
}

/// Perfect binary tree of depth `d` over f and a; 2^(d+1) - 2 edges.
pub fn gen_perfect_binary(d: u32) -> Tree {
    assert!(d >= 1, "depth must be at least 1");
    perfect(d, |_| "a".to_string())
}

/// t_i: perfect binary tree of depth 2^i whose leaves are pairwise distinct.
pub fn gen_m(i: u32) -> Tree {
    assert!((1..=4).contains(&i), "gen_m supports 1 <= i <= 4");
    perfect(1 << i, |k| format!("leaf_{k}"))
}

/// l(i): a, b, c, d, e by i mod 5.
pub fn label_l(i: usize) -> &'static str {
    ["a", "b", "c", "d", "e"][i % 5]
}

/// s_n: a right spine of 2^n f nodes; the left child of the i-th spine
/// node is l(i) and the spine ends in the leaf l(2^n).
pub fn gen_u(n: u32) -> Tree {
    assert!((3..=40).contains(&n), "gen_u needs 3 <= n <= 40");
    let len = 1usize << n;
    let mut al = Alphabet::new();
    let f = al.intern(Terminal::binary("f", INTERNAL));
    let leaves: Vec<u32> = (0..5).map(|i| al.intern(Terminal::binary(label_l(i), LEAF))).collect();
    let mut t = Tree::new(al);
    let mut spine = t.add_node(f);
    t.set_root(spine);
    for i in 0..len {
        let left = t.add_node(leaves[i % 5]);
        t.push_child(spine, left);
        let right = if i + 1 < len { f } else { leaves[len % 5] };
        let next = t.add_node(right);
        t.push_child(spine, next);
        spine = next;
    }
    t
}
