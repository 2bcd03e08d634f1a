//! Query evaluation directly over the grammar — counting, relabeling,
//! materialization, serialization and compressed (SLP) output, all without
//! expanding the compressed tree.
//!
//! Everything is driven by one memoized pass: for each nonterminal `A` and
//! automaton state `q`, the behavior table records in which states the run
//! leaves the parameter leaves of `A`'s body and how many nodes it selects
//! on the way. The pass touches every rule-body node once per state, so it
//! costs O(|Q|·|G|) node visits — expansion sizes never enter the picture.

mod chunks;
mod locate;
mod offsets;
mod slp_out;

pub use chunks::{build_chunks, ChunkTable};
pub use offsets::{OffRef, OffsetArena};
pub use slp_out::{dag_subtrees_slp, slt_to_slp, subtrees_slp};

use crate::automaton::{DstAutomaton, StateId};
use crate::error::{Error, Result};
use crate::grammar::{GrammarBuilder, NtId, RhsId, RhsNode, RhsTree, SltGrammar};
use num_bigint::BigUint;
use std::collections::HashSet;
use std::io::Write;

/// Memoized per-(nonterminal, state) behavior: exit states at the parameter
/// leaves and the number of nodes the run selects inside `val(A)`.
#[derive(Debug, Clone)]
pub struct BehaviorTable {
    n_states: usize,
    exits: Vec<Vec<StateId>>,
    counts: Vec<BigUint>,
    visits: u64,
}

impl BehaviorTable {
    fn index(&self, nt: NtId, q: StateId) -> usize {
        nt.0 as usize * self.n_states + q.0 as usize
    }

    pub fn exits(&self, nt: NtId, q: StateId) -> &[StateId] {
        &self.exits[self.index(nt, q)]
    }

    pub fn count(&self, nt: NtId, q: StateId) -> &BigUint {
        &self.counts[self.index(nt, q)]
    }

    /// Rule-body node visits performed while building the table; exactly
    /// Σ_A |P(A)| · |Q| by construction.
    pub fn visits(&self) -> u64 {
        self.visits
    }
}

/// Builds the behavior table in one pass over the rules in bottom-up order,
/// simulating the automaton over each body from every state.
pub fn build_behavior(g: &SltGrammar, a: &DstAutomaton) -> Result<BehaviorTable> {
    let order = g.topo_order()?;
    let n_states = a.state_count();
    let mut table = BehaviorTable {
        n_states,
        exits: vec![Vec::new(); g.nt_count() * n_states],
        counts: vec![BigUint::from(0u32); g.nt_count() * n_states],
        visits: 0,
    };
    for nt in order {
        let body = g.rule(nt);
        let rank = g.nt(nt).rank as usize;
        for q in 0..n_states as u32 {
            let q = StateId(q);
            let mut count = BigUint::from(0u32);
            let mut exits = vec![StateId(0); rank];
            let mut stack: Vec<(RhsId, StateId)> = vec![(body.root(), q)];
            while let Some((node, state)) = stack.pop() {
                table.visits += 1;
                match body.node(node) {
                    RhsNode::Underscore => {}
                    RhsNode::Param(i) => exits[*i as usize] = state,
                    RhsNode::Label { label, left, right } => {
                        let (rhs, _) = a.lookup(state, label.text());
                        if rhs.selecting {
                            count += 1u32;
                        }
                        stack.push((*left, rhs.left));
                        stack.push((*right, rhs.right));
                    }
                    RhsNode::Nt { nt: b, children } => {
                        let idx = table.index(*b, state);
                        count += &table.counts[idx];
                        for (i, c) in children.iter().enumerate() {
                            stack.push((*c, table.exits[idx][i]));
                        }
                    }
                }
            }
            let idx = table.index(nt, q);
            table.exits[idx] = exits;
            table.counts[idx] = count;
        }
    }
    Ok(table)
}

/// The number of nodes the automaton selects on `val(G)`, computed without
/// expansion. Arbitrary precision: the answer can be exponential in `|G|`.
pub fn count(g: &SltGrammar, a: &DstAutomaton) -> Result<BigUint> {
    let table = build_behavior(g, a)?;
    Ok(table.count(g.start(), a.initial()).clone())
}

/// Builds the relabeling grammar: one nonterminal per reachable
/// (state, nonterminal, exit states) combination, rule bodies copied from
/// the originals with occurrences retargeted and every selected label
/// marked. The expansion equals `val(G)` with exactly the selected nodes
/// marked. All |Q|·|N| candidate rules are materialized eagerly, then
/// unreachable ones removed.
pub fn relabel(g: &SltGrammar, a: &DstAutomaton) -> Result<SltGrammar> {
    let table = build_behavior(g, a)?;
    let n_states = a.state_count();

    let mut gb = GrammarBuilder::new();
    let mut taken: HashSet<String> = HashSet::new();
    let mut ids = Vec::with_capacity(g.nt_count() * n_states);
    for nt in g.nt_ids() {
        for q in 0..n_states as u32 {
            let q = StateId(q);
            let mut name = format!("{}_{}", a.state_name(q), g.nt(nt).name);
            for exit in table.exits(nt, q) {
                name.push('_');
                name.push_str(a.state_name(*exit));
            }
            while !taken.insert(name.clone()) {
                name.push('_');
            }
            ids.push(gb.declare(name, g.nt(nt).rank).expect("unique tuple names"));
        }
    }
    let tuple = |nt: NtId, q: StateId| ids[nt.0 as usize * n_states + q.0 as usize];

    enum Dest {
        Root,
        Left(RhsId),
        Right(RhsId),
        Child(RhsId, usize),
    }
    for nt in g.nt_ids() {
        let body = g.rule(nt);
        for q in 0..n_states as u32 {
            let q = StateId(q);
            let mut out = RhsTree::new();
            let mut stack: Vec<(RhsId, StateId, Dest)> = vec![(body.root(), q, Dest::Root)];
            while let Some((node, state, dest)) = stack.pop() {
                let new_id = match body.node(node) {
                    RhsNode::Underscore => out.push(RhsNode::Underscore),
                    RhsNode::Param(i) => out.push(RhsNode::Param(*i)),
                    RhsNode::Label { label, left, right } => {
                        let (rhs, _) = a.lookup(state, label.text());
                        let marked = label.is_marked() || rhs.selecting;
                        let id = out.push(RhsNode::Label {
                            label: label.with_mark(marked),
                            left: RhsId(u32::MAX),
                            right: RhsId(u32::MAX),
                        });
                        stack.push((*left, rhs.left, Dest::Left(id)));
                        stack.push((*right, rhs.right, Dest::Right(id)));
                        id
                    }
                    RhsNode::Nt { nt: b, children } => {
                        let exits = table.exits(*b, state).to_vec();
                        let id = out.push(RhsNode::Nt {
                            nt: tuple(*b, state),
                            children: vec![RhsId(u32::MAX); children.len()],
                        });
                        for (i, c) in children.iter().enumerate() {
                            stack.push((*c, exits[i], Dest::Child(id, i)));
                        }
                        id
                    }
                };
                match dest {
                    Dest::Root => out.set_root(new_id),
                    Dest::Left(p) => {
                        if let RhsNode::Label { left, .. } = out.node_mut(p) {
                            *left = new_id;
                        }
                    }
                    Dest::Right(p) => {
                        if let RhsNode::Label { right, .. } = out.node_mut(p) {
                            *right = new_id;
                        }
                    }
                    Dest::Child(p, i) => {
                        if let RhsNode::Nt { children, .. } = out.node_mut(p) {
                            children[i] = new_id;
                        }
                    }
                }
            }
            gb.set_rule(tuple(nt, q), out);
        }
    }
    let full = gb.finish(tuple(g.start(), a.initial()));
    Ok(full.remove_unreachable())
}

/// A strictly increasing sequence of 1-based pre-order numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultSet(Vec<BigUint>);

impl ResultSet {
    /// Validates strict monotonicity (which also rules out duplicates).
    pub fn new(ids: Vec<BigUint>) -> Result<ResultSet> {
        for w in ids.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::ResultNotIncreasing { id: w[1].to_string() });
            }
        }
        if let Some(first) = ids.first() {
            if first.bits() == 0 {
                return Err(Error::ResultNotIncreasing { id: "0".into() });
            }
        }
        Ok(ResultSet(ids))
    }

    pub fn from_u64s(ids: &[u64]) -> Result<ResultSet> {
        ResultSet::new(ids.iter().map(|i| BigUint::from(*i)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[BigUint] {
        &self.0
    }

    /// Lossless conversion when every id fits in a machine word.
    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        self.0.iter().map(u64::try_from).collect::<std::result::Result<_, _>>().ok()
    }
}

/// Instrumentation counters exposed for the complexity checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct EngineStats {
    /// Rule-body node visits of the behavior pass.
    pub behavior_visits: u64,
    /// Offset-list construction nodes allocated by the chunk pass.
    pub offset_allocs: u64,
}

/// The ordered list of pre-order numbers of the selected nodes, computed as
/// relabel → chunk pass → flatten of the start symbol's single chunk. The
/// start chunk spans the whole traversal, so its offsets are absolute
/// pre-order numbers.
pub fn materialize(g: &SltGrammar, a: &DstAutomaton) -> Result<ResultSet> {
    Ok(materialize_instrumented(g, a)?.0)
}

/// [`materialize`] plus instrumentation counters.
pub fn materialize_instrumented(
    g: &SltGrammar,
    a: &DstAutomaton,
) -> Result<(ResultSet, EngineStats)> {
    let table = build_behavior(g, a)?;
    let relabeled = relabel(g, a)?;
    let chunks = build_chunks(&relabeled)?;
    let start = relabeled.start();
    let ids = chunks.arena.flatten(chunks.marks[start.0 as usize][0]);
    let stats = EngineStats {
        behavior_visits: table.visits(),
        offset_allocs: chunks.arena.allocs(),
    };
    Ok((ResultSet(ids), stats))
}

/// Streams the XML serialization of every selected node's unranked subtree,
/// in pre-order of the result roots. Nested results are emitted in full
/// each time. Result roots are found by chunk-length descent through the
/// original grammar; nothing is ever expanded wholesale.
pub fn serialize<W: Write>(
    g: &SltGrammar,
    a: &DstAutomaton,
    mark_token: &str,
    out: &mut W,
) -> Result<()> {
    let ids = materialize(g, a)?;
    let mut ctx = locate::LocateCtx::new(g)?;
    for id in ids.ids() {
        let focus = ctx.locate(id).expect("materialized ids are in range");
        ctx.write_unranked_subtree(focus, mark_token, out)?;
    }
    Ok(())
}

/// Convenience wrapper collecting [`serialize`] output into a string.
pub fn serialize_to_string(g: &SltGrammar, a: &DstAutomaton, mark_token: &str) -> Result<String> {
    let mut buf = Vec::new();
    serialize(g, a, mark_token, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serialized XML is valid UTF-8"))
}

#[cfg(test)]
mod tests;
