//! Canonical Huffman codes and the run-length coding of code-length tables.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::bits::BitReader;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HuffmanError {
    #[error("code lengths violate the Kraft inequality")]
    InvalidLengths,
    #[error("code length table is empty")]
    Empty,
}

/// Huffman code lengths for `freqs` (indexed by symbol), ties going to
/// the smaller symbol. Symbols with frequency 0 get length 0; a lone
/// symbol gets length 1.
pub fn code_lengths(freqs: &[u64]) -> Vec<u32> {
    let order: Vec<usize> = (0..freqs.len()).collect();
    lengths_with_order(freqs, &order)
}

/// Huffman code lengths for the symbols of `seq`. Among equal weights a
/// merged node is taken before any symbol, merged nodes in creation
/// order, symbols in order of first appearance in `seq`.
pub fn code_lengths_of(seq: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let mut freqs: Vec<u64> = Vec::new();
    let mut order: Vec<usize> = Vec::new();
    let mut seen = 0;
    for v in seq {
        let v = v as usize;
        if v >= freqs.len() {
            freqs.resize(v + 1, 0);
            order.resize(v + 1, usize::MAX);
        }
        if freqs[v] == 0 {
            order[v] = seen;
            seen += 1;
        }
        freqs[v] += 1;
    }
    lengths_with_order(&freqs, &order)
}

/// `order[s]` breaks ties between symbols of equal weight.
fn lengths_with_order(freqs: &[u64], order: &[usize]) -> Vec<u32> {
    let mut lengths = vec![0u32; freqs.len()];
    let used: Vec<usize> = (0..freqs.len()).filter(|&s| freqs[s] > 0).collect();
    match used.len() {
        0 => return lengths,
        1 => {
            lengths[used[0]] = 1;
            return lengths;
        }
        _ => {}
    }
    // parent links of the merge tree; leaves are 0..freqs.len()
    let mut parent: Vec<usize> = vec![usize::MAX; freqs.len()];
    // (weight, 0 for merged nodes and 1 for leaves, tie key, node)
    let mut heap: BinaryHeap<Reverse<(u64, u8, usize, usize)>> = BinaryHeap::new();
    for &s in &used {
        heap.push(Reverse((freqs[s], 1, order[s], s)));
    }
    let mut merged = 0;
    while heap.len() > 1 {
        let Reverse((w1, _, _, a)) = heap.pop().expect("two items");
        let Reverse((w2, _, _, b)) = heap.pop().expect("two items");
        let node = parent.len();
        parent.push(usize::MAX);
        parent[a] = node;
        parent[b] = node;
        heap.push(Reverse((w1 + w2, 0, merged, node)));
        merged += 1;
    }
    let mut depth = vec![0u32; parent.len()];
    for v in (0..parent.len()).rev() {
        if parent[v] != usize::MAX {
            depth[v] = depth[parent[v]] + 1;
        }
    }
    for &s in &used {
        lengths[s] = depth[s];
    }
    lengths
}

/// Canonical codes for a length table: codes of equal length are
/// consecutive in symbol order and shorter codes precede longer ones.
/// Returns `(code, length)` per symbol; length 0 means "no code".
pub fn canonical_codes(lengths: &[u32]) -> Result<Vec<(u64, u32)>, HuffmanError> {
    let max = lengths.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Ok(vec![(0, 0); lengths.len()]);
    }
    if max > 63 {
        return Err(HuffmanError::InvalidLengths);
    }
    // Kraft: sum of 2^(max - l) must not exceed 2^max.
    let kraft: u128 = lengths.iter().filter(|&&l| l > 0).map(|&l| 1u128 << (max - l)).sum();
    if kraft > 1u128 << max {
        return Err(HuffmanError::InvalidLengths);
    }
    let mut count = vec![0u64; max as usize + 1];
    for &l in lengths.iter().filter(|&&l| l > 0) {
        count[l as usize] += 1;
    }
    // count[0] stays 0, so the first code of length 1 is 0
    let mut next = vec![0u64; max as usize + 1];
    let mut code = 0u64;
    for len in 1..=max as usize {
        code = (code + count[len - 1]) << 1;
        next[len] = code;
    }
    let mut codes = vec![(0, 0); lengths.len()];
    for (s, &l) in lengths.iter().enumerate() {
        if l > 0 {
            codes[s] = (next[l as usize], l);
            next[l as usize] += 1;
        }
    }
    Ok(codes)
}

/// Table-driven canonical decoder.
#[derive(Debug, Clone)]
pub struct Decoder {
    /// first code of each length
    first: Vec<u64>,
    /// number of codes of each length
    count: Vec<u64>,
    /// index into `symbols` of the first code of each length
    offset: Vec<usize>,
    symbols: Vec<u32>,
}

impl Decoder {
    pub fn new(lengths: &[u32]) -> Result<Self, HuffmanError> {
        let codes = canonical_codes(lengths)?;
        let max = lengths.iter().copied().max().unwrap_or(0) as usize;
        if max == 0 {
            return Err(HuffmanError::Empty);
        }
        let mut symbols: Vec<u32> = (0..lengths.len() as u32).filter(|&s| lengths[s as usize] > 0).collect();
        symbols.sort_by_key(|&s| (lengths[s as usize], s));
        let mut first = vec![0u64; max + 1];
        let mut count = vec![0u64; max + 1];
        let mut offset = vec![0usize; max + 1];
        for (i, &s) in symbols.iter().enumerate().rev() {
            let (code, len) = codes[s as usize];
            let len = len as usize;
            first[len] = code;
            offset[len] = i;
            count[len] += 1;
        }
        Ok(Decoder { first, count, offset, symbols })
    }

    /// Reads one symbol; `None` on end of input or an unused code.
    pub fn decode(&self, r: &mut BitReader) -> Option<u32> {
        let mut code = 0u64;
        for len in 1..self.first.len() {
            code = (code << 1) | r.read_bit()? as u64;
            if self.count[len] > 0 && code >= self.first[len] && code - self.first[len] < self.count[len] {
                return Some(self.symbols[self.offset[len] + (code - self.first[len]) as usize]);
            }
        }
        None
    }
}

/// A run-length token: a symbol of the length alphabet extended by the
/// three run indicators, followed by raw payload bits for indicators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RlToken {
    pub symbol: u32,
    /// (value, bit count) of the raw payload
    pub extra: Option<(u32, u32)>,
}

impl RlToken {
    fn lit(symbol: u32) -> Self {
        RlToken { symbol, extra: None }
    }

    fn run(symbol: u32, value: u32, bits: u32) -> Self {
        RlToken { symbol, extra: Some((value, bits)) }
    }
}

/// Run-length codes a length table whose entries are at most `n`.
/// Indicators: n+1 repeats a nonzero length 4..7 times (2 payload bits),
/// n+2 gives 4..11 zeros (3 bits), n+3 gives 12..139 zeros (7 bits).
/// A nonzero run is introduced by one copy of its value.
pub fn rle_encode(lengths: &[u32], n: u32) -> Vec<RlToken> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < lengths.len() {
        let m = lengths[i];
        let mut k = 1;
        while i + k < lengths.len() && lengths[i + k] == m {
            k += 1;
        }
        i += k;
        if k <= 3 {
            out.extend(std::iter::repeat(RlToken::lit(m)).take(k));
        } else if m > 0 {
            out.push(RlToken::lit(m));
            out.extend(std::iter::repeat(RlToken::run(n + 1, 3, 2)).take(k / 7));
            let l = (k % 7) as u32;
            if l > 3 {
                out.push(RlToken::run(n + 1, l - 4, 2));
            } else {
                out.extend(std::iter::repeat(RlToken::lit(m)).take(l as usize));
            }
        } else {
            out.extend(std::iter::repeat(RlToken::run(n + 3, 127, 7)).take(k / 139));
            let l = (k % 139) as u32;
            if l > 11 {
                out.push(RlToken::run(n + 3, l - 12, 7));
            } else if l > 3 {
                out.push(RlToken::run(n + 2, l - 4, 3));
            } else {
                out.extend(std::iter::repeat(RlToken::lit(0)).take(l as usize));
            }
        }
    }
    out
}

/// Payload width of a token symbol, given the largest length `n`.
pub fn payload_bits(symbol: u32, n: u32) -> u32 {
    match symbol.checked_sub(n) {
        Some(1) => 2,
        Some(2) => 3,
        Some(3) => 7,
        _ => 0,
    }
}

/// Incremental inverse of [`rle_encode`].
#[derive(Debug, Default)]
pub struct RlDecoder {
    pub lengths: Vec<u32>,
    marker: bool,
}

impl RlDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds one token. Returns false for a malformed sequence.
    pub fn push(&mut self, symbol: u32, payload: u32, n: u32) -> bool {
        if symbol <= n {
            self.lengths.push(symbol);
            self.marker = symbol > 0;
            return true;
        }
        match symbol - n {
            1 => {
                let Some(&m) = self.lengths.last() else { return false };
                if m == 0 {
                    return false;
                }
                if self.marker {
                    // the introducing copy only names the value
                    self.lengths.pop();
                    self.marker = false;
                }
                let reps = payload as usize + 4;
                self.lengths.extend(std::iter::repeat(m).take(reps));
            }
            2 => {
                self.lengths.extend(std::iter::repeat(0).take(payload as usize + 4));
                self.marker = false;
            }
            3 => {
                self.lengths.extend(std::iter::repeat(0).take(payload as usize + 12));
                self.marker = false;
            }
            _ => return false,
        }
        true
    }
}

/// Decodes a whole token list; test helper and reference.
pub fn rle_decode(tokens: &[RlToken], n: u32) -> Option<Vec<u32>> {
    let mut d = RlDecoder::new();
    for t in tokens {
        if !d.push(t.symbol, t.extra.map_or(0, |e| e.0), n) {
            return None;
        }
    }
    Some(d.lengths)
}
