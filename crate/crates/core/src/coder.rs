//! Binary serialization of a grammar.
//!
//! Layout, all fixed fields 32 bits wide and MSB-first:
//!
//! 1. bits per super code length `n_s`, number of super code lengths,
//!    then the super code lengths in `n_s` bits each;
//! 2. for the base codings C1 (start production), C2 (counts, ids and the
//!    other productions) and C3 (name bytes): the number of code lengths,
//!    then the run-length tokens of the table, super-coded, each run
//!    indicator followed by its raw payload;
//! 3. the value sequence: terminal and production counts, the three
//!    characteristic groups (raw 2-bit tag, count, ids), the names
//!    terminated by ETX, the non-start productions in id order and the
//!    start production, each right-hand side as ids in preorder.

use std::collections::HashMap;

use thiserror::Error;

use crate::bits::BitWriter;
use crate::grammar::{Grammar, NtId, Symbol};
use crate::huffman::{self, HuffmanError, RlToken};
use crate::xml_tree::{Characteristic, TermId};

/// Width of every fixed-length field.
pub const FIELD_BITS: u32 = 32;
/// Terminates every name in the name segment.
pub const ETX: u8 = 0x03;
/// Characteristic groups written explicitly; the rest is `11`.
pub const GROUPS: [Characteristic; 3] =
    [Characteristic::NoChildren, Characteristic::NoLeftChild, Characteristic::NoRightChild];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("start production has no right-hand side")]
    Empty,
    #[error("terminal {0:?} is not a binary-model terminal")]
    NotBinary(String),
    #[error("element name {0:?} contains the ETX byte")]
    EtxInName(String),
    #[error("value {0} does not fit a {FIELD_BITS}-bit field")]
    FieldOverflow(u64),
    #[error(transparent)]
    Huffman(#[from] HuffmanError),
}

/// Symbol ids: terminals 1..=|F|, the parameter |F|+1, non-start
/// nonterminals from |F|+2 with every callee before its callers.
#[derive(Clone, Debug)]
pub struct IdTable {
    pub terminals: Vec<TermId>,
    pub nonterminals: Vec<NtId>,
    term_ids: HashMap<TermId, u32>,
    nt_ids: HashMap<NtId, u32>,
}

impl IdTable {
    pub fn num_terminals(&self) -> u32 {
        self.terminals.len() as u32
    }

    pub fn param(&self) -> u32 {
        self.num_terminals() + 1
    }

    pub fn id(&self, sym: Symbol) -> u32 {
        match sym {
            Symbol::Terminal(t) => self.term_ids[&t],
            Symbol::Param => self.param(),
            Symbol::Nonterminal(a) => self.nt_ids[&a],
        }
    }
}

pub fn assign_ids(g: &Grammar) -> Result<IdTable, EncodeError> {
    let order = g.hierarchical_order().map_err(|_| EncodeError::Empty)?;
    let mut used: Vec<TermId> = Vec::new();
    for &a in &order {
        for v in g.subtree_preorder(g.root(a)) {
            if let Symbol::Terminal(t) = g.sym(v) {
                used.push(t);
            }
        }
    }
    used.sort_unstable();
    used.dedup();
    for &t in &used {
        let term = g.alphabet.get(t);
        if term.characteristic.is_none() {
            return Err(EncodeError::NotBinary(term.name.clone()));
        }
    }
    let term_ids = used.iter().enumerate().map(|(i, &t)| (t, i as u32 + 1)).collect();
    let nonterminals: Vec<NtId> = order.into_iter().filter(|&a| a != g.start()).collect();
    let first = used.len() as u32 + 2;
    let nt_ids = nonterminals.iter().enumerate().map(|(i, &a)| (a, first + i as u32)).collect();
    Ok(IdTable { terminals: used, nonterminals, term_ids, nt_ids })
}

/// An entry of the count/characteristic part of the value sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeaderValue {
    Int(u32),
    Tag(Characteristic),
}

/// The value sequence, split by the coding that serves each part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Values {
    /// Counts, tags and ids of the first two steps (C2, tags raw).
    pub header: Vec<HeaderValue>,
    /// Name bytes with ETX terminators (C3).
    pub names: Vec<u8>,
    /// Non-start productions in id order (C2).
    pub productions: Vec<u32>,
    /// The start production (C1).
    pub start: Vec<u32>,
}

pub fn serialize_values(g: &Grammar, ids: &IdTable) -> Result<Values, EncodeError> {
    let mut header = vec![
        HeaderValue::Int(ids.num_terminals()),
        HeaderValue::Int(ids.nonterminals.len() as u32),
    ];
    let ch_of = |t: TermId| g.alphabet.get(t).characteristic.expect("checked in assign_ids");
    for group in GROUPS {
        let members: Vec<u32> = ids
            .terminals
            .iter()
            .enumerate()
            .filter(|&(_, &t)| ch_of(t) == group)
            .map(|(i, _)| i as u32 + 1)
            .collect();
        header.push(HeaderValue::Tag(group));
        header.push(HeaderValue::Int(members.len() as u32));
        header.extend(members.into_iter().map(HeaderValue::Int));
    }
    let mut names = Vec::new();
    for &t in &ids.terminals {
        let name = &g.alphabet.get(t).name;
        if name.as_bytes().contains(&ETX) {
            return Err(EncodeError::EtxInName(name.clone()));
        }
        names.extend_from_slice(name.as_bytes());
        names.push(ETX);
    }
    let rhs = |a: NtId| -> Vec<u32> { g.subtree_preorder(g.root(a)).into_iter().map(|v| ids.id(g.sym(v))).collect() };
    let productions = ids.nonterminals.iter().flat_map(|&a| rhs(a)).collect();
    let start = rhs(g.start());
    Ok(Values { header, names, productions, start })
}

/// One base coding: its length table and the table's run-length tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseTable {
    pub lengths: Vec<u32>,
    pub tokens: Vec<RlToken>,
}

/// The super coding over the run-length tokens of the three base tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperCoding {
    /// Largest base code length; indicators are n+1, n+2, n+3.
    pub n: u32,
    /// Bits per stored super code length.
    pub n_s: u32,
    /// One length per symbol 0..=n+3.
    pub lengths: Vec<u32>,
    /// C1, C2, C3.
    pub tables: [BaseTable; 3],
}

/// Everything that is written, before bit packing.
#[derive(Clone, Debug)]
pub struct Plan {
    pub ids: IdTable,
    pub values: Values,
    pub coding: SuperCoding,
}

fn header_ints(values: &Values) -> impl Iterator<Item = u32> + '_ {
    values.header.iter().filter_map(|h| match *h {
        HeaderValue::Int(x) => Some(x),
        HeaderValue::Tag(_) => None,
    })
}

/// Run-length codes the base tables and builds the super coding.
pub fn super_coding(base: [Vec<u32>; 3]) -> SuperCoding {
    let n = base.iter().flatten().copied().max().unwrap_or(0);
    let tables = base.map(|lengths| {
        let tokens = huffman::rle_encode(&lengths, n);
        BaseTable { lengths, tokens }
    });
    let mut lengths = huffman::code_lengths_of(tables.iter().flat_map(|t| &t.tokens).map(|t| t.symbol));
    lengths.resize(n as usize + 4, 0);
    let max = lengths.iter().copied().max().unwrap_or(0);
    let n_s = (u32::BITS - max.leading_zeros()).max(1);
    SuperCoding { n, n_s, lengths, tables }
}

pub fn plan(g: &Grammar) -> Result<Plan, EncodeError> {
    if g.production(g.start()).map_or(true, |p| p.root == crate::xml_tree::NIL) {
        return Err(EncodeError::Empty);
    }
    let ids = assign_ids(g)?;
    let values = serialize_values(g, &ids)?;
    let c1 = huffman::code_lengths_of(values.start.iter().copied());
    let c2 = huffman::code_lengths_of(header_ints(&values).chain(values.productions.iter().copied()));
    let c3 = huffman::code_lengths_of(values.names.iter().map(|&b| b as u32));
    let coding = super_coding([c1, c2, c3]);
    Ok(Plan { ids, values, coding })
}

fn field(w: &mut BitWriter, value: u64) -> Result<(), EncodeError> {
    if value >> FIELD_BITS != 0 {
        return Err(EncodeError::FieldOverflow(value));
    }
    w.write(value, FIELD_BITS);
    Ok(())
}

fn emit(w: &mut BitWriter, codes: &[(u64, u32)], sym: u32) {
    let (code, len) = codes[sym as usize];
    debug_assert!(len > 0, "symbol {sym} has no code");
    w.write(code, len);
}

/// Packs a plan into bytes.
pub fn write(plan: &Plan) -> Result<Vec<u8>, EncodeError> {
    let mut w = BitWriter::new();
    let coding = &plan.coding;
    field(&mut w, coding.n_s as u64)?;
    field(&mut w, coding.lengths.len() as u64)?;
    for &l in &coding.lengths {
        w.write(l as u64, coding.n_s);
    }
    let sup = huffman::canonical_codes(&coding.lengths)?;
    for table in &coding.tables {
        field(&mut w, table.lengths.len() as u64)?;
        for t in &table.tokens {
            emit(&mut w, &sup, t.symbol);
            if let Some((value, bits)) = t.extra {
                w.write(value as u64, bits);
            }
        }
    }
    let [c1, c2, c3] = [0, 1, 2].map(|i| huffman::canonical_codes(&coding.tables[i].lengths));
    let (c1, c2, c3) = (c1?, c2?, c3?);
    for h in &plan.values.header {
        match *h {
            HeaderValue::Int(x) => emit(&mut w, &c2, x),
            HeaderValue::Tag(ch) => w.write(ch.bits() as u64, 2),
        }
    }
    for &b in &plan.values.names {
        emit(&mut w, &c3, b as u32);
    }
    for &x in &plan.values.productions {
        emit(&mut w, &c2, x);
    }
    for &x in &plan.values.start {
        emit(&mut w, &c1, x);
    }
    Ok(w.finish())
}

pub fn encode(g: &Grammar) -> Result<Vec<u8>, EncodeError> {
    write(&plan(g)?)
}
