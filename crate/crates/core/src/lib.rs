//! Evaluation of a downward/sibling XPath fragment directly over
//! grammar-compressed XML trees.
//!
//! XML element trees are encoded as binary trees (first child → left,
//! next sibling → right) and compressed into straight-line linear tree
//! grammars. Queries from the child/descendant/following-sibling fragment
//! are compiled into deterministic selecting top-down tree automata, which
//! run over the grammar itself — never over the expanded tree. On top of a
//! single memoized pass the crate offers:
//!
//! - counting the selected nodes,
//! - materializing their pre-order numbers,
//! - serializing the selected subtrees as XML,
//! - emitting a straight-line string grammar (SLP) for the concatenated
//!   subtree serializations, with a tighter construction for rank-0
//!   grammars (DAGs) in node normal form.
//!
//! A brute-force [`oracle`] module provides the reference semantics the
//! compressed paths are tested against.

pub mod automaton;
pub mod engine;
pub mod error;
pub mod grammar;
pub mod oracle;
pub mod slp;
pub mod tree;
pub mod xml;
pub mod xpath;

pub use error::{Error, Result, Violation};
pub use tree::{BinTree, Label, PreorderId, UnrankedTree};

/// Default cap on the labeled-node count of expansions; `val(G)` can be
/// exponential in `|G|`, so expanding is always guarded.
pub const DEFAULT_EXPANSION_LIMIT: u64 = 100_000_000;

/// Default cap on DFA/DST state counts; wildcard-heavy queries can blow up
/// exponentially under subset construction.
pub const DEFAULT_DFA_STATE_CAP: usize = 1 << 16;
