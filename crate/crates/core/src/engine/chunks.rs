//! The bottom-up chunk pass.
//!
//! A rank-k rule body splits at its parameter leaves into k+1 chunks of the
//! pre-order traversal. For each chunk the pass records its labeled-node
//! count and the offsets of marked labels (1-based within the chunk) as a
//! shared offset-list expression: a nested occurrence contributes its own
//! chunk lists by reference, shifted by the number of labeled nodes already
//! seen in the current chunk.

use super::offsets::{OffRef, OffsetArena};
use crate::error::Result;
use crate::grammar::{NtId, RhsId, RhsNode, SltGrammar};
use num_bigint::BigUint;

/// Per-nonterminal, per-chunk labeled-node counts and mark offsets.
#[derive(Debug, Clone)]
pub struct ChunkTable {
    /// `counts[nt][c]` = labeled nodes in chunk c of nt's body expansion.
    pub counts: Vec<Vec<BigUint>>,
    /// `marks[nt][c]` = offsets of marked nodes within the chunk.
    pub marks: Vec<Vec<OffRef>>,
    pub arena: OffsetArena,
}

impl ChunkTable {
    /// Labeled-node count of `val(nt)` (all chunks together).
    pub fn total(&self, nt: NtId) -> BigUint {
        self.counts[nt.0 as usize].iter().sum()
    }
}

/// Walk items: body nodes interleaved with the chunks of entered
/// occurrences — entering `B(c1,..,cm)` contributes B's chunk 0, then the
/// subtree c1, then B's chunk 1, and so on.
enum Work {
    Node(RhsId),
    NtChunk(NtId, usize),
}

/// Runs the chunk pass over all rules in bottom-up order.
pub fn build_chunks(g: &SltGrammar) -> Result<ChunkTable> {
    let order = g.topo_order()?;
    let mut table = ChunkTable {
        counts: vec![Vec::new(); g.nt_count()],
        marks: vec![Vec::new(); g.nt_count()],
        arena: OffsetArena::new(),
    };
    for nt in order {
        let body = g.rule(nt);
        let rank = g.nt(nt).rank as usize;
        let mut counts: Vec<BigUint> = Vec::with_capacity(rank + 1);
        let mut marks: Vec<OffRef> = Vec::with_capacity(rank + 1);
        let mut cur_count = BigUint::from(0u32);
        let mut cur_marks = OffsetArena::EMPTY;
        let mut stack = vec![Work::Node(body.root())];
        while let Some(item) = stack.pop() {
            match item {
                Work::Node(id) => match body.node(id) {
                    RhsNode::Underscore => {}
                    RhsNode::Param(_) => {
                        counts.push(std::mem::take(&mut cur_count));
                        marks.push(std::mem::replace(&mut cur_marks, OffsetArena::EMPTY));
                    }
                    RhsNode::Label { label, left, right } => {
                        cur_count += 1u32;
                        if label.is_marked() {
                            let single = table.arena.single(cur_count.clone());
                            cur_marks = table.arena.concat(cur_marks, single);
                        }
                        stack.push(Work::Node(*right));
                        stack.push(Work::Node(*left));
                    }
                    RhsNode::Nt { nt: b, children } => {
                        stack.push(Work::NtChunk(*b, children.len()));
                        for (i, c) in children.iter().enumerate().rev() {
                            stack.push(Work::Node(*c));
                            stack.push(Work::NtChunk(*b, i));
                        }
                    }
                },
                Work::NtChunk(b, c) => {
                    let nested_marks = table.marks[b.0 as usize][c];
                    if nested_marks != OffsetArena::EMPTY {
                        let shifted = table.arena.shift(&cur_count, nested_marks);
                        cur_marks = table.arena.concat(cur_marks, shifted);
                    }
                    cur_count += &table.counts[b.0 as usize][c];
                }
            }
        }
        counts.push(cur_count);
        marks.push(cur_marks);
        debug_assert_eq!(counts.len(), rank + 1, "one chunk per parameter gap");
        table.counts[nt.0 as usize] = counts;
        table.marks[nt.0 as usize] = marks;
    }
    Ok(table)
}
