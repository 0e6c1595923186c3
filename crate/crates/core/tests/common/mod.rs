//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treerepair::xml_tree::{parse_xml, NodeId, TermId, Tree};
use treerepair::{Optimize, Options};

pub const BOOKS_XML: &[u8] = include_bytes!("../data/books.xml");

pub fn books() -> Tree {
    parse_xml(BOOKS_XML).expect("books.xml parses")
}

/// A random element tree with 2 to `max_nodes` elements whose names
/// are drawn from the first `labels` letters. Repetition is encouraged by
/// sometimes copying an already generated subtree.
pub fn random_xml(seed: u64, max_nodes: usize, labels: u8) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(2..=max_nodes.max(2));
    let mut out = String::new();
    let mut count = 0;
    let mut pieces: Vec<String> = Vec::new();
    fn build(
        rng: &mut ChaCha8Rng,
        out: &mut String,
        count: &mut usize,
        target: usize,
        labels: u8,
        depth: usize,
        pieces: &mut Vec<String>,
    ) {
        if *count > 0 && !pieces.is_empty() && rng.gen_bool(0.1) {
            let p = pieces[rng.gen_range(0..pieces.len())].clone();
            let size = p.matches('<').count() - p.matches("</").count();
            if *count + size <= target {
                *count += size;
                out.push_str(&p);
                return;
            }
        }
        *count += 1;
        let name = (b'a' + rng.gen_range(0..labels)) as char;
        let start = out.len();
        let max_kids = if depth > 40 { 0 } else { 4 };
        let kids = if depth == 0 { rng.gen_range(1..=4) } else { rng.gen_range(0..=max_kids) };
        if kids == 0 {
            out.push('<');
            out.push(name);
            out.push_str("/>");
        } else {
            out.push('<');
            out.push(name);
            out.push('>');
            for _ in 0..kids {
                if *count >= target {
                    break;
                }
                build(rng, out, count, target, labels, depth + 1, pieces);
            }
            out.push_str("</");
            out.push(name);
            out.push('>');
        }
        if pieces.len() < 64 {
            pieces.push(out[start..].to_string());
        }
    }
    build(&mut rng, &mut out, &mut count, target, labels, 0, &mut pieces);
    out
}

pub fn random_tree(seed: u64, max_nodes: usize, labels: u8) -> Tree {
    parse_xml(random_xml(seed, max_nodes, labels).as_bytes()).expect("generated XML parses")
}

/// Every flag combination: {edges, filesize} x {dag, no_dag} x max_rank {1, 2, 4, unbounded}.
pub fn all_options() -> Vec<Options> {
    let mut v = Vec::new();
    for optimize in [Optimize::Edges, Optimize::FileSize] {
        for dag in [true, false] {
            for max_rank in [Some(1), Some(2), Some(4), None] {
                v.push(Options { max_rank, optimize, dag });
            }
        }
    }
    v
}

/// Nodes matching the digram (p, i, c), overlapping or not.
pub fn all_matches(t: &Tree, p: TermId, i: usize, c: TermId) -> Vec<NodeId> {
    (0..t.len() as NodeId)
        .filter(|&v| t.label(v) == p && t.children(v).get(i - 1).is_some_and(|&w| t.label(w) == c))
        .collect()
}

/// Size of a largest set of pairwise disjoint matches. Two matches overlap
/// exactly when one is the i-th child of the other, so the conflict graph
/// is a union of paths, and a path of k matches admits ceil(k/2).
pub fn max_disjoint(t: &Tree, p: TermId, i: usize, c: TermId) -> usize {
    let m = all_matches(t, p, i, c);
    let is_match = |v: NodeId| m.binary_search(&v).is_ok();
    let mut total = 0;
    for &top in &m {
        // paths start at matches that are not the i-th child of a match
        if t.parent(top).is_some_and(|q| is_match(q) && t.children(q).get(i - 1) == Some(&top)) {
            continue;
        }
        let mut len: usize = 0;
        let mut v = top;
        loop {
            len += 1;
            match t.children(v).get(i - 1) {
                Some(&w) if is_match(w) => v = w,
                _ => break,
            }
        }
        total += len.div_ceil(2);
    }
    total
}

/// Edge count of the minimal DAG, by hash-consing every subtree.
pub fn dag_edges_oracle(t: &Tree) -> usize {
    let mut ids: HashMap<(u32, Vec<usize>), usize> = HashMap::new();
    let mut class = vec![0usize; t.len()];
    let mut edges = 0;
    for v in t.postorder() {
        let key = (t.label(v), t.children(v).iter().map(|&c| class[c as usize]).collect::<Vec<_>>());
        let next = ids.len();
        class[v as usize] = *ids.entry(key).or_insert_with(|| {
            edges += t.children(v).len();
            next
        });
    }
    edges
}

/// The generated fixture families at test-friendly sizes.
pub fn fixture_trees() -> Vec<(String, Tree)> {
    use treerepair::fixtures::{gen_m, gen_perfect_binary, gen_u};
    let mut v = vec![("books".to_string(), books())];
    v.extend((1..=10).map(|d| (format!("perfect({d})"), gen_perfect_binary(d))));
    v.extend((1..=4).map(|i| (format!("M({i})"), gen_m(i))));
    v.extend((3..=12).map(|n| (format!("U({n})"), gen_u(n))));
    v
}
