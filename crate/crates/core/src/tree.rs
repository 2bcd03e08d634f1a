//! Uncompressed XML element trees and their first-child/next-sibling encoding.
//!
//! An [`UnrankedTree`] is an ordered tree of labeled element nodes. Its
//! [`BinTree`] encoding maps each node's first child to the left child and
//! its next sibling to the right child; a missing child or sibling becomes
//! an `_` leaf. Pre-order numbering is 1-based and counts labeled nodes
//! only, so it coincides with document order of the unranked tree.
//!
//! Both tree types are arena-backed and every traversal here is iterative:
//! encoded trees of grammar expansions are routinely chains hundreds of
//! thousands of nodes deep.

use crate::error::{Error, Result};
use std::fmt;

/// An element name, optionally carrying a mark flag.
///
/// Marked labels arise from relabeling a grammar under a selecting automaton;
/// they render with a `^` prefix in grammar files and with a configurable
/// mark token in XML output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    text: String,
    marked: bool,
}

impl Label {
    /// Creates an unmarked label, rejecting names that cannot survive the
    /// XML and grammar-file syntaxes: empty names, whitespace, markup
    /// characters, grammar punctuation, the reserved `_` and `%`, and a
    /// leading `^` (marks are a flag, not part of the name).
    pub fn new(text: impl Into<String>) -> Result<Label> {
        let text = text.into();
        let reject = |message: &str| -> Result<Label> {
            Err(Error::InvalidLabel { text: text.clone(), message: message.to_string() })
        };
        if text.is_empty() {
            return reject("labels must be non-empty");
        }
        if text == "_" || text == "%" {
            return reject("this name is reserved");
        }
        if text.starts_with('^') {
            return reject("a leading '^' denotes a mark; use Label::marked");
        }
        if let Some(c) = text
            .chars()
            .find(|c| c.is_whitespace() || matches!(c, '<' | '>' | '/' | '&' | '"' | '(' | ')' | ','))
        {
            return reject(&format!("character {c:?} is not allowed in labels"));
        }
        Ok(Label { text, marked: false })
    }

    /// Creates a marked label.
    pub fn marked(text: impl Into<String>) -> Result<Label> {
        let mut l = Label::new(text)?;
        l.marked = true;
        Ok(l)
    }

    /// Parses a tag or grammar-file name, interpreting a leading `^` as the mark flag.
    pub fn from_name(name: &str) -> Result<Label> {
        match name.strip_prefix('^') {
            Some(rest) => Label::marked(rest),
            None => Label::new(name),
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_marked(&self) -> bool {
        self.marked
    }

    pub fn with_mark(&self, marked: bool) -> Label {
        Label { text: self.text.clone(), marked }
    }

    /// Renders the label with the given mark token (used in XML output).
    pub fn render(&self, mark_token: &str) -> String {
        if self.marked {
            format!("{mark_token}{}", self.text)
        } else {
            self.text.clone()
        }
    }
}

// Display is `^name` for marked labels, the grammar-file syntax.
impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.marked {
            write!(f, "^{}", self.text)
        } else {
            write!(f, "{}", self.text)
        }
    }
}

/// Index of a node in an [`UnrankedTree`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UNodeId(pub u32);

/// Index of an internal (labeled) node in a [`BinTree`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BNodeId(pub u32);

/// 1-based pre-order index over labeled nodes; equals document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PreorderId(pub u64);

#[derive(Debug, Clone)]
pub struct UnrankedNode {
    pub label: Label,
    pub children: Vec<UNodeId>,
}

/// A finite ordered tree of labeled element nodes with a single root.
#[derive(Debug, Clone)]
pub struct UnrankedTree {
    nodes: Vec<UnrankedNode>,
    root: UNodeId,
}

impl UnrankedTree {
    /// Builds a tree from an arena; children ids must already be valid.
    pub fn from_arena(nodes: Vec<UnrankedNode>, root: UNodeId) -> UnrankedTree {
        debug_assert!((root.0 as usize) < nodes.len());
        UnrankedTree { nodes, root }
    }

    /// Single-node tree.
    pub fn leaf(label: Label) -> UnrankedTree {
        UnrankedTree { nodes: vec![UnrankedNode { label, children: Vec::new() }], root: UNodeId(0) }
    }

    pub fn root(&self) -> UNodeId {
        self.root
    }

    pub fn node(&self, id: UNodeId) -> &UnrankedNode {
        &self.nodes[id.0 as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in document order.
    pub fn preorder_nodes(&self) -> Vec<UNodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            order.push(id);
            let n = self.node(id);
            for &c in n.children.iter().rev() {
                stack.push(c);
            }
        }
        order
    }

    /// 1-based document-order number for every node, indexed by `UNodeId`.
    pub fn preorder_ids(&self) -> Vec<PreorderId> {
        let mut ids = vec![PreorderId(0); self.nodes.len()];
        for (i, id) in self.preorder_nodes().into_iter().enumerate() {
            ids[id.0 as usize] = PreorderId(i as u64 + 1);
        }
        ids
    }
}

impl PartialEq for UnrankedTree {
    fn eq(&self, other: &Self) -> bool {
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (self.node(a), other.node(b));
            if na.label != nb.label || na.children.len() != nb.children.len() {
                return false;
            }
            stack.extend(na.children.iter().copied().zip(nb.children.iter().copied()));
        }
        true
    }
}

impl Eq for UnrankedTree {}

#[derive(Debug, Clone)]
pub struct BinNode {
    pub label: Label,
    /// `None` encodes an `_` leaf.
    pub left: Option<BNodeId>,
    pub right: Option<BNodeId>,
}

/// A binary tree with labeled internal nodes and `_` leaves — the
/// first-child/next-sibling encoding of an XML element tree.
///
/// Internal nodes always have exactly two children; an absent child is the
/// `_` leaf, represented as `None`. A tree whose root is itself `_` (no
/// labeled nodes at all) has `root() == None`.
#[derive(Debug, Clone, Default)]
pub struct BinTree {
    nodes: Vec<BinNode>,
    root: Option<BNodeId>,
}

impl BinTree {
    /// The tree consisting of a single `_` leaf.
    pub fn underscore() -> BinTree {
        BinTree::default()
    }

    pub fn new() -> BinTree {
        BinTree::default()
    }

    /// Adds an internal node; its children must already exist in this arena.
    pub fn push(&mut self, label: Label, left: Option<BNodeId>, right: Option<BNodeId>) -> BNodeId {
        let id = BNodeId(self.nodes.len() as u32);
        self.nodes.push(BinNode { label, left, right });
        id
    }

    pub fn set_root(&mut self, root: Option<BNodeId>) {
        self.root = root;
    }

    pub fn root(&self) -> Option<BNodeId> {
        self.root
    }

    pub fn node(&self, id: BNodeId) -> &BinNode {
        &self.nodes[id.0 as usize]
    }

    /// Number of internal (labeled) nodes.
    pub fn labeled_count(&self) -> u64 {
        self.nodes.len() as u64
    }

    /// Number of `_` leaves. A document tree with n labeled nodes has n+1.
    pub fn underscore_count(&self) -> u64 {
        if self.root.is_none() {
            return 1;
        }
        let slots = 2 * self.nodes.len() as u64;
        let filled = self.nodes.len() as u64 - 1;
        slots - filled
    }

    /// Tree size as edge count, counting edges to `_` leaves.
    pub fn edge_size(&self) -> u64 {
        if self.root.is_none() {
            0
        } else {
            2 * self.nodes.len() as u64
        }
    }

    /// Labeled nodes in pre-order (document order), skipping `_` leaves.
    pub fn preorder_nodes(&self) -> Vec<BNodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = Vec::new();
        stack.extend(self.root);
        while let Some(id) = stack.pop() {
            order.push(id);
            let n = self.node(id);
            // Right pushed first so the left subtree is emitted first.
            stack.extend(n.right);
            stack.extend(n.left);
        }
        order
    }

    /// 1-based pre-order number per labeled node, indexed by `BNodeId`.
    pub fn preorder_ids(&self) -> Vec<PreorderId> {
        let mut ids = vec![PreorderId(0); self.nodes.len()];
        for (i, id) in self.preorder_nodes().into_iter().enumerate() {
            ids[id.0 as usize] = PreorderId(i as u64 + 1);
        }
        ids
    }

    /// Pre-order numbers of nodes whose label is marked, ascending.
    pub fn marked_preorder(&self) -> Vec<u64> {
        self.preorder_nodes()
            .into_iter()
            .enumerate()
            .filter(|(_, id)| self.node(*id).label.is_marked())
            .map(|(i, _)| i as u64 + 1)
            .collect()
    }
}

impl PartialEq for BinTree {
    fn eq(&self, other: &Self) -> bool {
        let mut stack = vec![(self.root, other.root)];
        while let Some(pair) = stack.pop() {
            match pair {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    let (na, nb) = (self.node(a), other.node(b));
                    if na.label != nb.label {
                        return false;
                    }
                    stack.push((na.left, nb.left));
                    stack.push((na.right, nb.right));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for BinTree {}

/// First-child/next-sibling encoding: first child becomes the left child,
/// next sibling the right child, `_` marks absence. The root of a document
/// has no sibling, so its right child is always `_`.
pub fn fcns_encode(t: &UnrankedTree) -> BinTree {
    let order = t.preorder_nodes();
    let n = t.node_count();
    // next_sibling[i] = the sibling after node i, if any
    let mut next_sibling: Vec<Option<UNodeId>> = vec![None; n];
    for id in &order {
        let node = t.node(*id);
        for w in node.children.windows(2) {
            next_sibling[w[0].0 as usize] = Some(w[1]);
        }
    }
    let mut bin = BinTree::new();
    let mut bin_of: Vec<Option<BNodeId>> = vec![None; n];
    // Reverse document order guarantees that both the first child and the
    // next sibling are already built when a node is pushed.
    for id in order.iter().rev() {
        let node = t.node(*id);
        let left = node.children.first().and_then(|c| bin_of[c.0 as usize]);
        let right = next_sibling[id.0 as usize].and_then(|s| bin_of[s.0 as usize]);
        bin_of[id.0 as usize] = Some(bin.push(node.label.clone(), left, right));
    }
    bin.set_root(bin_of[t.root().0 as usize]);
    bin
}

/// Inverse of [`fcns_encode`]. Fails if the root has a next sibling (the
/// tree encodes a forest) or the tree has no labeled node at all.
pub fn fcns_decode(b: &BinTree) -> Result<UnrankedTree> {
    let root = b.root().ok_or(Error::RootHasSibling)?;
    if b.node(root).right.is_some() {
        return Err(Error::RootHasSibling);
    }
    let mut nodes: Vec<UnrankedNode> = b
        .preorder_nodes()
        .iter()
        .map(|id| UnrankedNode { label: b.node(*id).label.clone(), children: Vec::new() })
        .collect();
    // The pre-order rank doubles as the unranked arena index.
    let pre = b.preorder_ids();
    let uid = |id: BNodeId| UNodeId(pre[id.0 as usize].0 as u32 - 1);
    for id in b.preorder_nodes() {
        // Children of `id` are the left child followed by its right spine.
        let mut child = b.node(id).left;
        while let Some(c) = child {
            nodes[uid(id).0 as usize].children.push(uid(c));
            child = b.node(c).right;
        }
    }
    Ok(UnrankedTree::from_arena(nodes, uid(root)))
}
