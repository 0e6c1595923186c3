//! Inverse of [`crate::coder`].

use thiserror::Error;

use crate::bits::BitReader;
use crate::coder::{ETX, FIELD_BITS, GROUPS};
use crate::grammar::{Grammar, NtId, ProdKind, Symbol};
use crate::huffman::{self, Decoder, HuffmanError, RlDecoder};
use crate::xml_tree::{Alphabet, Characteristic, NodeId, Terminal};

/// Super code lengths need at most this many bits each.
const MAX_SUPER_BITS: u32 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("input ends early")]
    Truncated,
    #[error("invalid code length table: {0}")]
    Lengths(#[from] HuffmanError),
    #[error("bad header field: {0}")]
    Header(String),
    #[error("malformed run-length sequence")]
    RunLength,
    #[error("unexpected symbol id {0}")]
    Symbol(u32),
    #[error("terminal table is inconsistent: {0}")]
    Terminals(String),
    #[error("{0} unread bits after the start production")]
    Trailing(u64),
}

struct Input<'a> {
    r: BitReader<'a>,
}

impl<'a> Input<'a> {
    fn bits(&mut self, n: u32) -> Result<u64, DecodeError> {
        self.r.read(n).ok_or(DecodeError::Truncated)
    }

    fn field(&mut self) -> Result<u64, DecodeError> {
        self.bits(FIELD_BITS)
    }

    fn sym(&mut self, d: &Decoder) -> Result<u32, DecodeError> {
        d.decode(&mut self.r).ok_or(DecodeError::Truncated)
    }

    fn remaining(&self) -> u64 {
        self.r.total_bits() - self.r.position()
    }

    /// A count that cannot exceed the number of bits left.
    fn bounded(&mut self, d: &Decoder, what: &str) -> Result<u32, DecodeError> {
        let x = self.sym(d)?;
        if x as u64 > self.remaining() {
            return Err(DecodeError::Header(format!("{what} {x} exceeds the input size")));
        }
        Ok(x)
    }
}

fn read_table(inp: &mut Input, sup: &Decoder, n: u32) -> Result<Vec<u32>, DecodeError> {
    let count = inp.field()?;
    let mut rl = RlDecoder::new();
    while (rl.lengths.len() as u64) < count {
        let s = inp.sym(sup)?;
        let bits = huffman::payload_bits(s, n);
        let payload = inp.bits(bits)? as u32;
        if !rl.push(s, payload, n) {
            return Err(DecodeError::RunLength);
        }
    }
    if rl.lengths.len() as u64 != count {
        return Err(DecodeError::RunLength);
    }
    Ok(rl.lengths)
}

/// What an id stands for while right-hand sides are read.
struct Symbols {
    num_terminals: u32,
    /// Ranks of the nonterminals defined so far, by id order.
    ranks: Vec<usize>,
}

impl Symbols {
    fn resolve(&self, g: &Grammar, id: u32) -> Result<(Symbol, usize), DecodeError> {
        let f = self.num_terminals;
        if (1..=f).contains(&id) {
            let t = id - 1;
            return Ok((Symbol::Terminal(t), g.alphabet.get(t).rank));
        }
        if id == f + 1 {
            return Ok((Symbol::Param, 0));
        }
        let k = id.checked_sub(f + 2).ok_or(DecodeError::Symbol(id))? as usize;
        match self.ranks.get(k) {
            // nonterminal k was created as production k + 1
            Some(&rank) => Ok((Symbol::Nonterminal(k as NtId + 1), rank)),
            None => Err(DecodeError::Symbol(id)),
        }
    }
}

/// Reads one right-hand side in preorder; returns its root and rank.
fn read_rhs(inp: &mut Input, d: &Decoder, g: &mut Grammar, syms: &Symbols) -> Result<(NodeId, usize), DecodeError> {
    let (sym, rank) = syms.resolve(g, inp.sym(d)?)?;
    let root = g.alloc(sym);
    let mut params = usize::from(sym == Symbol::Param);
    // (node, children still to read)
    let mut stack = vec![(root, rank)];
    while let Some(top) = stack.last_mut() {
        if top.1 == 0 {
            stack.pop();
            continue;
        }
        top.1 -= 1;
        let parent = top.0;
        let (sym, rank) = syms.resolve(g, inp.sym(d)?)?;
        let v = g.alloc(sym);
        g.push_child(parent, v);
        params += usize::from(sym == Symbol::Param);
        stack.push((v, rank));
    }
    Ok((root, params))
}

pub fn decode(data: &[u8]) -> Result<Grammar, DecodeError> {
    let mut inp = Input { r: BitReader::new(data) };
    let n_s = inp.field()?;
    if !(1..=MAX_SUPER_BITS as u64).contains(&n_s) {
        return Err(DecodeError::Header(format!("super length width {n_s}")));
    }
    let count = inp.field()?;
    if !(4..=(1 << MAX_SUPER_BITS) + 4).contains(&count) {
        return Err(DecodeError::Header(format!("super length count {count}")));
    }
    let super_lengths: Vec<u32> =
        (0..count).map(|_| inp.bits(n_s as u32).map(|x| x as u32)).collect::<Result<_, _>>()?;
    let n = count as u32 - 4;
    let sup = Decoder::new(&super_lengths)?;
    let c1 = Decoder::new(&read_table(&mut inp, &sup, n)?)?;
    let c2 = Decoder::new(&read_table(&mut inp, &sup, n)?)?;
    let c3 = Decoder::new(&read_table(&mut inp, &sup, n)?)?;

    let f = inp.bounded(&c2, "terminal count")?;
    let p = inp.bounded(&c2, "production count")?;
    let mut chars = vec![None; f as usize];
    for group in GROUPS {
        let tag = Characteristic::from_bits(inp.bits(2)? as u8).expect("two bits");
        if tag != group {
            return Err(DecodeError::Header(format!("expected tag {}, got {}", group.superscript(), tag.superscript())));
        }
        let k = inp.bounded(&c2, "group size")?;
        for _ in 0..k {
            let id = inp.sym(&c2)?;
            let slot = id.checked_sub(1).and_then(|i| chars.get_mut(i as usize)).ok_or(DecodeError::Symbol(id))?;
            if slot.is_some() {
                return Err(DecodeError::Terminals(format!("id {id} listed twice")));
            }
            *slot = Some(group);
        }
    }
    let mut alphabet = Alphabet::new();
    for ch in chars {
        let mut name = Vec::new();
        loop {
            let b = inp.sym(&c3)?;
            let b = u8::try_from(b).map_err(|_| DecodeError::Symbol(b))?;
            if b == ETX {
                break;
            }
            name.push(b);
        }
        let name = String::from_utf8(name).map_err(|_| DecodeError::Terminals("name is not UTF-8".into()))?;
        let before = alphabet.len();
        alphabet.intern(Terminal::binary(name, ch.unwrap_or(Characteristic::TwoChildren)));
        if alphabet.len() == before {
            return Err(DecodeError::Terminals("duplicate terminal".into()));
        }
    }

    let mut g = Grammar::new(alphabet);
    let mut syms = Symbols { num_terminals: f, ranks: Vec::with_capacity(p as usize) };
    for _ in 0..p {
        let (root, rank) = read_rhs(&mut inp, &c2, &mut g, &syms)?;
        let a = g.add_production(rank, ProdKind::Pattern);
        g.set_root(a, root);
        syms.ranks.push(rank);
    }
    let (root, params) = read_rhs(&mut inp, &c1, &mut g, &syms)?;
    if params != 0 {
        return Err(DecodeError::Symbol(syms.num_terminals + 1));
    }
    let s = g.start();
    g.set_root(s, root);
    let left = inp.remaining();
    if left >= 8 {
        return Err(DecodeError::Trailing(left));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coder::encode;

    #[test]
    fn roundtrip_small() {
        let text = "S -> f^11(A(a^00),A(b^00))\nA(y) -> g^11(y,a^00)\n";
        let g = Grammar::from_text(text).unwrap();
        let back = decode(&encode(&g).unwrap()).unwrap();
        assert_eq!(back.canonical_text(), g.canonical_text());
    }

    #[test]
    fn truncated_input() {
        let g = Grammar::from_text("S -> f^11(a^00,b^00)").unwrap();
        let bytes = encode(&g).unwrap();
        for cut in 0..bytes.len() {
            assert!(decode(&bytes[..cut]).is_err(), "prefix of {cut} bytes decoded");
        }
    }
}
