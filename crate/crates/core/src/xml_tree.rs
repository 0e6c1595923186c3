//! Ranked trees over an interned alphabet, and the first-child/next-sibling
//! mapping between XML element structure and binary ranked trees.

use std::collections::HashMap;
use std::fmt;

use quick_xml::events::Event;
use quick_xml::Reader;
use smallvec::SmallVec;
use thiserror::Error;

pub type TermId = u32;
pub type NodeId = u32;

/// Marker for "no node".
pub const NIL: NodeId = u32::MAX;

/// Which of the two binary-model links a node carries.
///
/// The two-bit code reads "left, right": `10` has a first child only,
/// `01` has a next sibling only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Characteristic {
    NoChildren,
    NoLeftChild,
    NoRightChild,
    TwoChildren,
}

impl Characteristic {
    pub const ALL: [Characteristic; 4] = [
        Characteristic::NoChildren,
        Characteristic::NoLeftChild,
        Characteristic::NoRightChild,
        Characteristic::TwoChildren,
    ];

    pub fn from_links(first_child: bool, next_sibling: bool) -> Self {
        match (first_child, next_sibling) {
            (false, false) => Characteristic::NoChildren,
            (false, true) => Characteristic::NoLeftChild,
            (true, false) => Characteristic::NoRightChild,
            (true, true) => Characteristic::TwoChildren,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            Characteristic::NoChildren => 0b00,
            Characteristic::NoLeftChild => 0b01,
            Characteristic::NoRightChild => 0b10,
            Characteristic::TwoChildren => 0b11,
        }
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            0b00 => Some(Characteristic::NoChildren),
            0b01 => Some(Characteristic::NoLeftChild),
            0b10 => Some(Characteristic::NoRightChild),
            0b11 => Some(Characteristic::TwoChildren),
            _ => None,
        }
    }

    pub fn has_first_child(self) -> bool {
        self.bits() & 0b10 != 0
    }

    pub fn has_next_sibling(self) -> bool {
        self.bits() & 0b01 != 0
    }

    pub fn rank(self) -> usize {
        self.bits().count_ones() as usize
    }

    pub fn superscript(self) -> &'static str {
        match self {
            Characteristic::NoChildren => "00",
            Characteristic::NoLeftChild => "01",
            Characteristic::NoRightChild => "10",
            Characteristic::TwoChildren => "11",
        }
    }
}

/// A terminal symbol. Binary-model terminals carry a characteristic that
/// fixes their rank; plain ranked terminals only carry a rank.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Terminal {
    pub name: String,
    pub rank: usize,
    pub characteristic: Option<Characteristic>,
}

impl Terminal {
    pub fn binary(name: impl Into<String>, ch: Characteristic) -> Self {
        Terminal { name: name.into(), rank: ch.rank(), characteristic: Some(ch) }
    }

    pub fn ranked(name: impl Into<String>, rank: usize) -> Self {
        Terminal { name: name.into(), rank, characteristic: None }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.characteristic {
            Some(ch) => write!(f, "{}^{}", self.name, ch.superscript()),
            None => f.write_str(&self.name),
        }
    }
}

/// Interned terminals; ids are dense and follow insertion order.
#[derive(Clone, Debug, Default)]
pub struct Alphabet {
    terms: Vec<Terminal>,
    lookup: HashMap<Terminal, TermId>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, t: Terminal) -> TermId {
        if let Some(&id) = self.lookup.get(&t) {
            return id;
        }
        let id = self.terms.len() as TermId;
        self.lookup.insert(t.clone(), id);
        self.terms.push(t);
        id
    }

    pub fn find(&self, t: &Terminal) -> Option<TermId> {
        self.lookup.get(t).copied()
    }

    pub fn get(&self, id: TermId) -> &Terminal {
        &self.terms[id as usize]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &Terminal)> {
        self.terms.iter().enumerate().map(|(i, t)| (i as TermId, t))
    }
}

#[derive(Clone, Debug)]
struct TreeNode {
    label: TermId,
    parent: NodeId,
    children: SmallVec<[NodeId; 2]>,
}

/// A ranked, ordered, labeled tree stored in an arena.
#[derive(Clone, Debug)]
pub struct Tree {
    pub alphabet: Alphabet,
    nodes: Vec<TreeNode>,
    root: NodeId,
}

impl Tree {
    pub fn new(alphabet: Alphabet) -> Self {
        Tree { alphabet, nodes: Vec::new(), root: NIL }
    }

    pub fn add_node(&mut self, label: TermId) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(TreeNode { label, parent: NIL, children: SmallVec::new() });
        id
    }

    pub fn push_child(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[child as usize].parent = parent;
        self.nodes[parent as usize].children.push(child);
    }

    pub fn set_root(&mut self, root: NodeId) {
        self.root = root;
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// |t|, the number of edges.
    pub fn edges(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn label(&self, v: NodeId) -> TermId {
        self.nodes[v as usize].label
    }

    pub fn terminal(&self, v: NodeId) -> &Terminal {
        self.alphabet.get(self.label(v))
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.nodes[v as usize].children
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.nodes[v as usize].parent;
        (p != NIL).then_some(p)
    }

    /// 1-based position of `v` among its parent's children.
    pub fn index(&self, v: NodeId) -> Option<usize> {
        let p = self.parent(v)?;
        self.children(p).iter().position(|&c| c == v).map(|i| i + 1)
    }

    /// Nodes in preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        if self.root == NIL {
            return out;
        }
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children(v).iter().rev());
        }
        out
    }

    /// Nodes in postorder, driven by [`next_in_postorder`].
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        if self.root == NIL {
            return out;
        }
        let mut v = next_in_postorder(self, self.root);
        loop {
            out.push(v);
            if v == self.root {
                break;
            }
            v = next_in_postorder(self, v);
        }
        out
    }

    /// Checks that every node has exactly as many children as its label's rank.
    pub fn is_well_ranked(&self) -> bool {
        self.preorder().iter().all(|&v| self.children(v).len() == self.terminal(v).rank)
    }

    /// Structural equality that compares terminals by value, so trees over
    /// differently numbered alphabets can be compared.
    pub fn same_as(&self, other: &Tree) -> bool {
        if self.len() != other.len() {
            return false;
        }
        if self.root == NIL || other.root == NIL {
            return self.root == other.root;
        }
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            if self.terminal(a) != other.terminal(b) {
                return false;
            }
            let (ca, cb) = (self.children(a), other.children(b));
            if ca.len() != cb.len() {
                return false;
            }
            stack.extend(ca.iter().copied().zip(cb.iter().copied()));
        }
        true
    }
}

/// Successor of `v` in postorder. From the root this yields the first node
/// of the traversal; the last node visited is the root again.
pub fn next_in_postorder(tree: &Tree, v: NodeId) -> NodeId {
    let descend = |mut w: NodeId| {
        while let Some(&c) = tree.children(w).first() {
            w = c;
        }
        w
    };
    if v == tree.root() {
        return descend(v);
    }
    let p = tree.parent(v).expect("non-root node has a parent");
    let siblings = tree.children(p);
    let i = siblings.iter().position(|&c| c == v).expect("child of its parent");
    match siblings.get(i + 1) {
        Some(&next) => descend(next),
        None => p,
    }
}

#[derive(Debug, Error)]
pub enum XmlError {
    #[error("malformed XML at byte {position}: {message}")]
    Malformed { position: u64, message: String },
    #[error("tree is not in the binary model: {0}")]
    NotBinary(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct PendingNode {
    name: String,
    first_child: Option<NodeId>,
    characteristic: Characteristic,
}

/// Parses element structure into the binary tree model.
///
/// Labels are assigned with the start-element/end-element stack scheme: the
/// root is labeled when it opens, every other node when its parent closes,
/// so terminal ids follow that labeling order. A sequence of top-level
/// elements is accepted and becomes a chain of next-sibling links.
pub fn parse_xml(input: &[u8]) -> Result<Tree, XmlError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().check_end_names = true;

    let mut pending: Vec<PendingNode> = Vec::new();
    let mut label_order: Vec<NodeId> = Vec::new();
    let mut node_stack: Vec<NodeId> = Vec::new();
    // (element, number of children seen); the bottom frame holds top-level elements.
    let mut open: Vec<(NodeId, usize)> = vec![(NIL, 0)];
    let mut tree = Tree::new(Alphabet::new());
    let mut buf = Vec::new();

    let malformed = |reader: &Reader<&[u8]>, message: String| XmlError::Malformed {
        position: reader.buffer_position() as u64,
        message,
    };

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| malformed(&reader, e.to_string()))?;
        let (name, is_empty) = match &event {
            Event::Start(e) => (Some(e.name().as_ref().to_vec()), false),
            Event::Empty(e) => (Some(e.name().as_ref().to_vec()), true),
            Event::End(_) => (None, false),
            Event::Eof => break,
            _ => {
                buf.clear();
                continue;
            }
        };
        match name {
            Some(raw) => {
                let name = String::from_utf8(raw)
                    .map_err(|_| malformed(&reader, "element name is not UTF-8".into()))?;
                let v = tree.add_node(0);
                pending.push(PendingNode {
                    name,
                    first_child: None,
                    characteristic: Characteristic::NoChildren,
                });
                if tree.root() == NIL {
                    tree.set_root(v);
                    label_order.push(v);
                }
                open.last_mut().expect("bottom frame").1 += 1;
                node_stack.push(v);
                open.push((v, 0));
                if is_empty {
                    end_element(&mut open, &mut node_stack, &mut pending, &mut tree, &mut label_order);
                }
            }
            None => {
                if open.len() < 2 {
                    return Err(malformed(&reader, "unexpected end tag".into()));
                }
                end_element(&mut open, &mut node_stack, &mut pending, &mut tree, &mut label_order);
            }
        }
        buf.clear();
    }
    if open.len() != 1 {
        return Err(malformed(&reader, "unclosed element at end of input".into()));
    }
    if tree.root() == NIL {
        return Err(malformed(&reader, "no root element".into()));
    }
    // Close the virtual document frame: links the top-level siblings.
    end_element(&mut open, &mut node_stack, &mut pending, &mut tree, &mut label_order);
    if tree.len() < 2 {
        return Err(XmlError::Unsupported("the root element has no children".into()));
    }

    for &v in &label_order {
        let p = &pending[v as usize];
        let id = tree.alphabet.intern(Terminal::binary(p.name.clone(), p.characteristic));
        tree.nodes[v as usize].label = id;
    }
    Ok(tree)
}

fn end_element(
    open: &mut Vec<(NodeId, usize)>,
    node_stack: &mut Vec<NodeId>,
    pending: &mut [PendingNode],
    tree: &mut Tree,
    label_order: &mut Vec<NodeId>,
) {
    let (elem, count) = open.pop().expect("open frame");
    let root = tree.root();
    let mut next: Option<NodeId> = None;
    for _ in 0..count {
        let c = node_stack.pop().expect("child on node stack");
        let first = pending[c as usize].first_child;
        let ch = Characteristic::from_links(first.is_some(), next.is_some());
        pending[c as usize].characteristic = ch;
        if let Some(f) = first {
            tree.push_child(c, f);
        }
        if let Some(n) = next {
            tree.push_child(c, n);
        }
        if c != root {
            label_order.push(c);
        }
        next = Some(c);
    }
    if elem != NIL {
        pending[elem as usize].first_child = next;
    }
}

/// Writes the element structure encoded by a binary-model tree.
/// A root with a next sibling produces a sequence of top-level elements.
pub fn serialize_xml(tree: &Tree) -> Result<Vec<u8>, XmlError> {
    let mut out = Vec::new();
    if tree.root() == NIL {
        return Ok(out);
    }
    let links = |v: NodeId| -> Result<(Option<NodeId>, Option<NodeId>), XmlError> {
        let t = tree.terminal(v);
        let ch = t
            .characteristic
            .ok_or_else(|| XmlError::NotBinary(format!("terminal {t} has no characteristic")))?;
        let cs = tree.children(v);
        if cs.len() != ch.rank() {
            return Err(XmlError::NotBinary(format!("node labeled {t} has {} children", cs.len())));
        }
        let first = ch.has_first_child().then(|| cs[0]);
        let next = ch.has_next_sibling().then(|| cs[cs.len() - 1]);
        Ok((first, next))
    };
    let mut open: Vec<NodeId> = Vec::new();
    let mut cur = Some(tree.root());
    loop {
        while let Some(v) = cur {
            let name = &tree.terminal(v).name;
            let (first, next) = links(v)?;
            match first {
                Some(f) => {
                    out.push(b'<');
                    out.extend_from_slice(name.as_bytes());
                    out.push(b'>');
                    open.push(v);
                    cur = Some(f);
                }
                None => {
                    out.push(b'<');
                    out.extend_from_slice(name.as_bytes());
                    out.extend_from_slice(b"/>");
                    cur = next;
                }
            }
        }
        match open.pop() {
            Some(p) => {
                out.extend_from_slice(b"</");
                out.extend_from_slice(tree.terminal(p).name.as_bytes());
                out.push(b'>');
                cur = links(p)?.1;
            }
            None => break,
        }
    }
    Ok(out)
}
