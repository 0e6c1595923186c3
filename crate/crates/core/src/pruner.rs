//! Removal of unprofitable productions after the replacement step.

use crate::grammar::{Grammar, NtId};

/// Threshold for `-optimize edges`: drop productions that save nothing.
pub const TAU_EDGES: i64 = 0;
/// Threshold for `-optimize filesize`.
pub const TAU_FILESIZE: i64 = 2;

/// Prunes in two phases. Phase 1 eliminates every non-start production
/// referenced exactly once, until none is left. Phase 2 visits the
/// remaining productions once, callers before callees, and eliminates a
/// production whose current sav value is at most `tau`.
pub fn prune(g: &mut Grammar, tau: i64) {
    eliminate_single_refs(g);
    let order = visiting_order(g);
    for a in order {
        if g.production(a).is_some() && g.sav(a) <= tau {
            g.eliminate(a);
        }
    }
}

pub fn eliminate_single_refs(g: &mut Grammar) {
    loop {
        let mut changed = false;
        for a in visiting_order(g) {
            if g.production(a).is_some() && g.ref_count(a) <= 1 {
                g.eliminate(a);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Reverse hierarchical order without the start symbol.
fn visiting_order(g: &Grammar) -> Vec<NtId> {
    let mut order = g.hierarchical_order().expect("acyclic grammar");
    order.pop();
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_to_prune() {
        let text = "S -> f(A(a),A(b))\nA(y) -> g(h(y,a),h(a,a))\n";
        let mut g = Grammar::from_text(text).unwrap();
        let before = g.canonical_text();
        prune(&mut g, TAU_EDGES);
        assert_eq!(g.canonical_text(), before);
    }

    #[test]
    fn single_reference_removed() {
        let mut g = Grammar::from_text("S -> f(A,a)\nA -> g(B,B)\nB -> h(a,a)").unwrap();
        prune(&mut g, TAU_EDGES);
        assert_eq!(g.canonical_text(), "A1 -> h(a,a)\nS -> f(g(A1,A1),a)\n");
    }
}
