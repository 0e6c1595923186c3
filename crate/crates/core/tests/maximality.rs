mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treerepair::digram_index::{compute_occurrences, DigramIndex};
use treerepair::grammar::Symbol;
use common::{all_matches, max_disjoint};
use treerepair::xml_tree::{NodeId, TermId, Tree};
use treerepair::Grammar;

/// Exhaustive search, for small match sets.
fn max_disjoint_exhaustive(t: &Tree, p: TermId, i: usize, c: TermId) -> Option<usize> {
    let m = all_matches(t, p, i, c);
    if m.len() > 16 {
        return None;
    }
    let mut best = 0;
    for mask in 0u32..1 << m.len() {
        let chosen: Vec<NodeId> = (0..m.len()).filter(|&k| mask >> k & 1 == 1).map(|k| m[k]).collect();
        let ok = chosen.iter().all(|&v| !chosen.contains(&t.children(v)[i - 1]));
        if ok {
            best = best.max(chosen.len());
        }
    }
    Some(best)
}

fn random_digram(t: &Tree, rng: &mut ChaCha8Rng) -> (TermId, usize, TermId) {
    if rng.gen_bool(0.6) {
        // an actual edge of the tree, favoring equal-label chains
        let v = rng.gen_range(0..t.len() as NodeId);
        if let Some(q) = t.parent(v) {
            return (t.label(q), t.index(v).unwrap(), t.label(v));
        }
    }
    let n = t.alphabet.len() as TermId;
    let p = rng.gen_range(0..n);
    let rank = t.alphabet.get(p).rank.max(1);
    let c = if rng.gen_bool(0.5) { p } else { rng.gen_range(0..n) };
    (p, rng.gen_range(1..=rank), c)
}

fn check(t: &Tree, p: TermId, i: usize, c: TermId) {
    let occ = compute_occurrences(t, p, i, c);
    let matches = all_matches(t, p, i, c);
    for &v in &occ {
        assert!(matches.binary_search(&v).is_ok(), "{v} is not an occurrence");
        assert!(!occ.contains(&t.children(v)[i - 1]), "overlapping occurrences");
    }
    let best = max_disjoint(t, p, i, c);
    assert_eq!(occ.len(), best, "digram ({p},{i},{c})");
    if let Some(ex) = max_disjoint_exhaustive(t, p, i, c) {
        assert_eq!(ex, best);
    }
}

#[test]
fn greedy_postorder_is_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for seed in 0..1000 {
        let labels = rng.gen_range(1..4);
        let t = common::random_tree(seed, 200, labels);
        for _ in 0..4 {
            let (p, i, c) = random_digram(&t, &mut rng);
            check(&t, p, i, c);
        }
    }
}

#[test]
fn long_chains() {
    // f(f(f(...))) chains of every length up to 20
    for len in 1..=20 {
        let mut text = "a".to_string();
        for _ in 0..len {
            text = format!("f({text})");
        }
        let t = Grammar::from_text(&format!("S -> {text}")).unwrap().unfold().unwrap();
        let f = t.label(t.root());
        check(&t, f, 1, f);
    }
}

#[test]
fn index_counts_match_oracle_on_plain_trees() {
    for seed in 0..300 {
        let t = common::random_tree(seed, 200, 2);
        let g = Grammar::from_tree(&t);
        let idx = DigramIndex::build(&g, None, false);
        for (d, freq) in idx.digrams() {
            let (Symbol::Terminal(p), Symbol::Terminal(c)) = (d.parent, d.child) else {
                panic!("plain tree has only terminals");
            };
            assert_eq!(freq as usize, max_disjoint(&t, p, d.index as usize, c), "seed {seed}");
        }
    }
}
