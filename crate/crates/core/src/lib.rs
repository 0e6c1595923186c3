//! Grammar-based compression of the element structure of XML documents:
//! repeated digrams are folded into a small linear straight-line tree
//! grammar, which is written in a compact Huffman-coded binary format.
//!
//! Pipeline: [`xml_tree::parse_xml`] builds the binary tree model,
//! [`dag::build_dag`] shares repeated subtrees, [`replacer`] replaces
//! frequent digrams, [`pruner`] drops unprofitable productions and
//! [`coder`] serializes the result. [`decoder`] reverses the last step.

pub mod coder;
pub mod dag;
pub mod decoder;
pub mod digram_index;
pub mod fixtures;
pub mod grammar;
pub mod huffman;
pub mod pruner;
pub mod replacer;
pub mod xml_tree;

mod bits;

use thiserror::Error;

pub use grammar::{Grammar, NtId, Symbol};
pub use xml_tree::{Characteristic, Terminal, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimize {
    Edges,
    FileSize,
}

impl Optimize {
    pub fn tau(self) -> i64 {
        match self {
            Optimize::Edges => pruner::TAU_EDGES,
            Optimize::FileSize => pruner::TAU_FILESIZE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    /// Largest rank of a new nonterminal; `None` is unbounded.
    pub max_rank: Option<usize>,
    pub optimize: Optimize,
    pub dag: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { max_rank: Some(4), optimize: Optimize::FileSize, dag: true }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Xml(#[from] xml_tree::XmlError),
    #[error(transparent)]
    Grammar(#[from] grammar::GrammarError),
    #[error(transparent)]
    Encode(#[from] coder::EncodeError),
    #[error(transparent)]
    Decode(#[from] decoder::DecodeError),
}

/// Turns a tree into a pruned grammar.
pub fn compress_tree(tree: &Tree, opts: &Options) -> Grammar {
    let mut g = if opts.dag { dag::build_dag(tree) } else { Grammar::from_tree(tree) };
    replacer::run_replacement(&mut g, opts.max_rank, opts.dag);
    pruner::prune(&mut g, opts.optimize.tau());
    g
}

/// XML bytes in, compressed bytes out.
pub fn compress(xml: &[u8], opts: &Options) -> Result<Vec<u8>, Error> {
    let tree = xml_tree::parse_xml(xml)?;
    let g = compress_tree(&tree, opts);
    Ok(coder::encode(&g)?)
}

/// Compressed bytes in, XML element structure out.
pub fn decompress(data: &[u8]) -> Result<Vec<u8>, Error> {
    let g = decoder::decode(data)?;
    let tree = g.unfold()?;
    Ok(xml_tree::serialize_xml(&tree)?)
}
