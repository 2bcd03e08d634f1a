//! Straight-line linear tree grammars.
//!
//! A grammar has one rule per ranked nonterminal; the start nonterminal has
//! rank 0. Rule bodies are trees over labels (always binary), `_` leaves,
//! parameters `y1..yk` (each used exactly once, in pre-order) and
//! nonterminal occurrences. The uses-relation between nonterminals must be
//! acyclic and every nonterminal reachable from the start, so the grammar
//! derives exactly one tree.
//!
//! Rule bodies are arena-backed ([`RhsTree`]); the arena contains exactly
//! the nodes of the tree, so sizes are O(1). All traversals are iterative —
//! rule bodies produced by DAG compression can be as deep as the input
//! document.

mod dag;
mod text;

pub use dag::{build_dag, node_normal_form};
pub use text::{parse_grammar, parse_grammar_unchecked, write_grammar};

use crate::error::{Error, Result, Violation};
use crate::tree::{BinTree, Label};
use num_bigint::BigUint;
use std::collections::HashMap;

/// Index of a nonterminal within its grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NtId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonterminal {
    pub name: String,
    pub rank: u32,
}

/// Index of a node within a rule body arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RhsId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RhsNode {
    /// The `_` leaf.
    Underscore,
    /// Parameter leaf `y(i+1)` (stored 0-based).
    Param(u32),
    /// A labeled node; labels always have exactly two children.
    Label { label: Label, left: RhsId, right: RhsId },
    /// A nonterminal occurrence with rank-many children.
    Nt { nt: NtId, children: Vec<RhsId> },
}

/// A rule body. The arena holds exactly the nodes reachable from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhsTree {
    nodes: Vec<RhsNode>,
    root: RhsId,
}

const PLACEHOLDER: RhsId = RhsId(u32::MAX);

impl RhsTree {
    pub fn new() -> RhsTree {
        RhsTree { nodes: Vec::new(), root: PLACEHOLDER }
    }

    pub fn push(&mut self, node: RhsNode) -> RhsId {
        let id = RhsId(self.nodes.len() as u32);
        self.nodes.push(node);
        id
    }

    /// Single-node body.
    pub fn leaf(node: RhsNode) -> RhsTree {
        let mut t = RhsTree::new();
        let r = t.push(node);
        t.set_root(r);
        t
    }

    pub fn set_root(&mut self, root: RhsId) {
        self.root = root;
    }

    pub fn root(&self) -> RhsId {
        self.root
    }

    pub fn node(&self, id: RhsId) -> &RhsNode {
        &self.nodes[id.0 as usize]
    }

    pub(crate) fn node_mut(&mut self, id: RhsId) -> &mut RhsNode {
        &mut self.nodes[id.0 as usize]
    }

    pub fn node_count(&self) -> u64 {
        self.nodes.len() as u64
    }

    /// Tree size as edge count.
    pub fn edge_size(&self) -> u64 {
        self.node_count().saturating_sub(1)
    }

    /// Node ids in pre-order (children of nonterminal occurrences in order,
    /// label children left then right).
    pub fn preorder(&self) -> Vec<RhsId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            order.push(id);
            match self.node(id) {
                RhsNode::Underscore | RhsNode::Param(_) => {}
                RhsNode::Label { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
                RhsNode::Nt { children, .. } => stack.extend(children.iter().rev().copied()),
            }
        }
        order
    }
}

impl Default for RhsTree {
    fn default() -> Self {
        RhsTree::new()
    }
}

/// A straight-line linear tree grammar: ranked nonterminals, a rank-0 start,
/// and one rule body per nonterminal.
///
/// The struct itself does not enforce the straight-line invariants; call
/// [`SltGrammar::validate`] (or construct via [`parse_grammar`]) before
/// relying on them. This looseness is deliberate: the relabeling
/// construction temporarily produces unreachable nonterminals that
/// [`SltGrammar::remove_unreachable`] cleans up.
#[derive(Debug, Clone)]
pub struct SltGrammar {
    nts: Vec<Nonterminal>,
    rules: Vec<RhsTree>,
    start: NtId,
    by_name: HashMap<String, NtId>,
}

/// Incremental construction: declare nonterminals, then attach one rule each.
#[derive(Debug, Default)]
pub struct GrammarBuilder {
    nts: Vec<Nonterminal>,
    rules: Vec<Option<RhsTree>>,
    by_name: HashMap<String, NtId>,
}

impl GrammarBuilder {
    pub fn new() -> GrammarBuilder {
        GrammarBuilder::default()
    }

    /// Declares a nonterminal; names must be unique within the grammar.
    pub fn declare(&mut self, name: impl Into<String>, rank: u32) -> Result<NtId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::GrammarInvalid(vec![Violation::new(
                Some(name.clone()),
                "",
                "duplicate nonterminal name",
            )]));
        }
        let id = NtId(self.nts.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.nts.push(Nonterminal { name, rank });
        self.rules.push(None);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<NtId> {
        self.by_name.get(name).copied()
    }

    pub fn rank(&self, id: NtId) -> u32 {
        self.nts[id.0 as usize].rank
    }

    pub fn set_rule(&mut self, id: NtId, body: RhsTree) {
        self.rules[id.0 as usize] = Some(body);
    }

    /// Finishes the grammar with the given start nonterminal. Every declared
    /// nonterminal must have a rule.
    pub fn finish(self, start: NtId) -> SltGrammar {
        let rules: Vec<RhsTree> = self
            .rules
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.unwrap_or_else(|| panic!("nonterminal #{i} has no rule")))
            .collect();
        SltGrammar { nts: self.nts, rules, start, by_name: self.by_name }
    }
}

impl SltGrammar {
    pub fn nt_count(&self) -> usize {
        self.nts.len()
    }

    pub fn start(&self) -> NtId {
        self.start
    }

    pub fn nt(&self, id: NtId) -> &Nonterminal {
        &self.nts[id.0 as usize]
    }

    pub fn rule(&self, id: NtId) -> &RhsTree {
        &self.rules[id.0 as usize]
    }

    pub fn nt_ids(&self) -> impl Iterator<Item = NtId> {
        (0..self.nts.len() as u32).map(NtId)
    }

    pub fn nt_by_name(&self, name: &str) -> Option<NtId> {
        self.by_name.get(name).copied()
    }

    /// Grammar size: the sum of rule-body edge counts.
    pub fn size(&self) -> u64 {
        self.rules.iter().map(|r| r.edge_size()).sum()
    }

    /// Maximum nonterminal rank.
    pub fn rank(&self) -> u32 {
        self.nts.iter().map(|n| n.rank).max().unwrap_or(0)
    }

    /// Checks every straight-line invariant and returns all violations:
    /// start rank 0, parameter occurrence and pre-order, occurrence arity,
    /// acyclicity of the uses-relation, and reachability from the start.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let subject = |id: NtId| Some(self.nt(id).name.clone());

        if self.nt(self.start).rank != 0 {
            violations.push(Violation::new(
                subject(self.start),
                "",
                format!("start nonterminal must have rank 0, has rank {}", self.nt(self.start).rank),
            ));
        }

        for id in self.nt_ids() {
            let rank = self.nt(id).rank;
            let body = self.rule(id);
            let mut params_seen: Vec<u32> = Vec::new();
            for (pos, nid) in body.preorder().into_iter().enumerate() {
                match body.node(nid) {
                    RhsNode::Underscore | RhsNode::Label { .. } => {}
                    RhsNode::Param(i) => {
                        if *i >= rank {
                            violations.push(Violation::new(
                                subject(id),
                                format!("node #{pos}"),
                                format!("parameter y{} exceeds rank {rank}", i + 1),
                            ));
                        }
                        params_seen.push(*i);
                    }
                    RhsNode::Nt { nt, children } => {
                        let expected = self.nt(*nt).rank as usize;
                        if children.len() != expected {
                            violations.push(Violation::new(
                                subject(id),
                                format!("node #{pos}"),
                                format!(
                                    "occurrence of {} has {} children, expected {expected}",
                                    self.nt(*nt).name,
                                    children.len()
                                ),
                            ));
                        }
                    }
                }
            }
            let expected: Vec<u32> = (0..rank).collect();
            if params_seen != expected {
                violations.push(Violation::new(
                    subject(id),
                    "",
                    format!(
                        "parameters must be y1..y{rank}, each exactly once, in pre-order; found [{}]",
                        params_seen.iter().map(|i| format!("y{}", i + 1)).collect::<Vec<_>>().join(", ")
                    ),
                ));
            }
        }

        if let Err(v) = self.try_topo_order() {
            violations.push(v);
        }

        let reachable = self.reachable_set();
        for id in self.nt_ids() {
            if !reachable[id.0 as usize] {
                violations.push(Violation::new(
                    subject(id),
                    "",
                    "not reachable from the start nonterminal",
                ));
            }
        }

        violations
    }

    /// Like [`validate`](Self::validate) but as a `Result` for use in pipelines.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::GrammarInvalid(v))
        }
    }

    /// Nonterminals referenced in the body of `id`, in pre-order, with duplicates.
    fn references(&self, id: NtId) -> Vec<NtId> {
        let body = self.rule(id);
        body.preorder()
            .into_iter()
            .filter_map(|nid| match body.node(nid) {
                RhsNode::Nt { nt, .. } => Some(*nt),
                _ => None,
            })
            .collect()
    }

    fn reachable_set(&self) -> Vec<bool> {
        let mut reachable = vec![false; self.nt_count()];
        let mut queue = vec![self.start];
        reachable[self.start.0 as usize] = true;
        while let Some(id) = queue.pop() {
            for r in self.references(id) {
                if !reachable[r.0 as usize] {
                    reachable[r.0 as usize] = true;
                    queue.push(r);
                }
            }
        }
        reachable
    }

    fn try_topo_order(&self) -> std::result::Result<Vec<NtId>, Violation> {
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; self.nt_count()];
        let mut order = Vec::with_capacity(self.nt_count());
        for root in self.nt_ids() {
            if color[root.0 as usize] != WHITE {
                continue;
            }
            // (nonterminal, its references, next reference index)
            let mut stack: Vec<(NtId, Vec<NtId>, usize)> = Vec::new();
            color[root.0 as usize] = GRAY;
            stack.push((root, self.references(root), 0));
            while let Some((id, refs, i)) = stack.last_mut() {
                if let Some(&next) = refs.get(*i) {
                    *i += 1;
                    match color[next.0 as usize] {
                        WHITE => {
                            color[next.0 as usize] = GRAY;
                            stack.push((next, self.references(next), 0));
                        }
                        GRAY => {
                            let mut cycle: Vec<String> = stack
                                .iter()
                                .skip_while(|(s, _, _)| *s != next)
                                .map(|(s, _, _)| self.nt(*s).name.clone())
                                .collect();
                            cycle.push(self.nt(next).name.clone());
                            return Err(Violation::new(
                                Some(self.nt(next).name.clone()),
                                "",
                                format!("hierarchical order is cyclic: {}", cycle.join(" -> ")),
                            ));
                        }
                        _ => {}
                    }
                } else {
                    let id = *id;
                    color[id.0 as usize] = BLACK;
                    order.push(id);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    /// Bottom-up processing order: every nonterminal occurring in `P(A)`
    /// precedes `A`. Errors if the uses-relation is cyclic.
    pub fn topo_order(&self) -> Result<Vec<NtId>> {
        self.try_topo_order().map_err(|v| Error::GrammarInvalid(vec![v]))
    }

    /// Labeled-node count of `val(A)` for every nonterminal (parameters
    /// contribute nothing). Arbitrary precision: expansions are routinely
    /// exponential in the grammar size.
    pub fn labeled_counts(&self) -> Result<Vec<BigUint>> {
        let order = self.topo_order()?;
        let mut counts = vec![BigUint::from(0u32); self.nt_count()];
        for id in order {
            let body = self.rule(id);
            let mut total = BigUint::from(0u32);
            for nid in body.preorder() {
                match body.node(nid) {
                    RhsNode::Label { .. } => total += 1u32,
                    RhsNode::Nt { nt, .. } => total += &counts[nt.0 as usize],
                    _ => {}
                }
            }
            counts[id.0 as usize] = total;
        }
        Ok(counts)
    }

    /// Expands `val(A)` into an explicit body tree whose leaves are `_` or
    /// parameters. Guarded by `limit` on the labeled-node count.
    pub fn expand_nt(&self, nt: NtId, limit: u64) -> Result<RhsTree> {
        let counts = self.labeled_counts()?;
        if counts[nt.0 as usize] > BigUint::from(limit) {
            return Err(Error::ExpansionLimit {
                needed: counts[nt.0 as usize].to_string(),
                limit,
            });
        }

        #[derive(Clone, Copy)]
        struct Closure {
            rule: NtId,
            node: RhsId,
            env: usize,
        }
        enum Dest {
            Root,
            Left(RhsId),
            Right(RhsId),
        }
        // Environment 0 is the identity: parameters stay parameter leaves.
        const IDENTITY: usize = 0;
        let mut envs: Vec<Vec<Closure>> = vec![Vec::new()];
        let mut out = RhsTree::new();
        let patch = |out: &mut RhsTree, dest: Dest, id: RhsId| match dest {
            Dest::Root => out.set_root(id),
            Dest::Left(p) => {
                if let RhsNode::Label { left, .. } = out.node_mut(p) {
                    *left = id;
                }
            }
            Dest::Right(p) => {
                if let RhsNode::Label { right, .. } = out.node_mut(p) {
                    *right = id;
                }
            }
        };

        let mut tasks: Vec<(NtId, RhsId, usize, Dest)> =
            vec![(nt, self.rule(nt).root(), IDENTITY, Dest::Root)];
        while let Some((rule, node, env, dest)) = tasks.pop() {
            match self.rule(rule).node(node) {
                RhsNode::Underscore => {
                    let id = out.push(RhsNode::Underscore);
                    patch(&mut out, dest, id);
                }
                RhsNode::Param(i) => {
                    if env == IDENTITY {
                        let id = out.push(RhsNode::Param(*i));
                        patch(&mut out, dest, id);
                    } else {
                        let c = envs[env][*i as usize];
                        tasks.push((c.rule, c.node, c.env, dest));
                    }
                }
                RhsNode::Label { label, left, right } => {
                    let id = out.push(RhsNode::Label {
                        label: label.clone(),
                        left: PLACEHOLDER,
                        right: PLACEHOLDER,
                    });
                    patch(&mut out, dest, id);
                    tasks.push((rule, *right, env, Dest::Right(id)));
                    tasks.push((rule, *left, env, Dest::Left(id)));
                }
                RhsNode::Nt { nt: b, children } => {
                    let closures: Vec<Closure> =
                        children.iter().map(|&c| Closure { rule, node: c, env }).collect();
                    envs.push(closures);
                    tasks.push((*b, self.rule(*b).root(), envs.len() - 1, dest));
                }
            }
        }
        Ok(out)
    }

    /// Derives `val(G)`, the single tree this grammar produces.
    pub fn expand(&self, limit: u64) -> Result<BinTree> {
        let body = self.expand_nt(self.start, limit)?;
        // Reverse pre-order guarantees children are converted before parents.
        let order = body.preorder();
        let mut bin = BinTree::new();
        let mut bin_of = vec![None; body.node_count() as usize];
        for id in order.iter().rev() {
            match body.node(*id) {
                RhsNode::Underscore => {}
                RhsNode::Label { label, left, right } => {
                    let l = bin_of[left.0 as usize];
                    let r = bin_of[right.0 as usize];
                    bin_of[id.0 as usize] = Some(bin.push(label.clone(), l, r));
                }
                RhsNode::Param(_) | RhsNode::Nt { .. } => {
                    unreachable!("start expansion contains no parameters or occurrences")
                }
            }
        }
        bin.set_root(bin_of[body.root().0 as usize]);
        Ok(bin)
    }

    /// Restriction to the nonterminals reachable from the start.
    pub fn remove_unreachable(&self) -> SltGrammar {
        let reachable = self.reachable_set();
        let mut remap: Vec<Option<NtId>> = vec![None; self.nt_count()];
        let mut gb = GrammarBuilder::new();
        for id in self.nt_ids() {
            if reachable[id.0 as usize] {
                let nt = self.nt(id);
                remap[id.0 as usize] =
                    Some(gb.declare(nt.name.clone(), nt.rank).expect("names were unique"));
            }
        }
        for id in self.nt_ids() {
            if let Some(new_id) = remap[id.0 as usize] {
                let mut body = self.rule(id).clone();
                for i in 0..body.node_count() {
                    if let RhsNode::Nt { nt, .. } = body.node_mut(RhsId(i as u32)) {
                        *nt = remap[nt.0 as usize].expect("referenced nonterminal is reachable");
                    }
                }
                gb.set_rule(new_id, body);
            }
        }
        gb.finish(remap[self.start.0 as usize].expect("start is reachable"))
    }

    /// A rendering that is invariant under nonterminal renaming: nonterminals
    /// are renumbered in first-discovery order starting from the start rule.
    /// Two grammars are isomorphic iff their canonical forms are equal.
    pub fn canonical_form(&self) -> String {
        let mut canon: HashMap<u32, usize> = HashMap::new();
        let mut queue = vec![self.start];
        canon.insert(self.start.0, 0);
        let mut lines = Vec::new();
        let mut i = 0;
        while i < queue.len() {
            let id = queue[i];
            i += 1;
            let body = self.rule(id);
            for nid in body.preorder() {
                if let RhsNode::Nt { nt, .. } = body.node(nid) {
                    if !canon.contains_key(&nt.0) {
                        canon.insert(nt.0, canon.len());
                        queue.push(*nt);
                    }
                }
            }
        }
        for &id in &queue {
            let rank = self.nt(id).rank;
            let lhs = if rank == 0 {
                format!("G{}", canon[&id.0])
            } else {
                let params: Vec<String> = (1..=rank).map(|i| format!("y{i}")).collect();
                format!("G{}({})", canon[&id.0], params.join(","))
            };
            let rhs = text::render_term(self.rule(id), |nt| format!("G{}", canon[&nt.0]));
            lines.push(format!("{lhs} -> {rhs}"));
        }
        lines.join("\n")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::xml;

    pub(crate) const LIBRARY_SLT: &str = "\
S -> lib(B(B(_)),_)
B(y1) -> book(T,y1)
T -> title(_,author(_,_))
";

    /// Chain grammar deriving 2^(n+1) `a` nodes as a monadic chain.
    pub(crate) fn doubling_text(n: u32) -> String {
        let mut s = format!("S -> A{n}(_)\n");
        for i in (1..=n).rev() {
            s.push_str(&format!("A{i}(y1) -> A{}(A{}(y1))\n", i - 1, i - 1));
        }
        s.push_str("A0(y1) -> a(a(y1,_),_)\n");
        s
    }

    #[test]
    fn parses_and_writes_library_grammar() {
        let g = parse_grammar(LIBRARY_SLT).unwrap();
        assert_eq!(g.nt_count(), 3);
        assert_eq!(g.size(), 10);
        assert_eq!(g.rank(), 1);
        let order: Vec<&str> =
            g.topo_order().unwrap().iter().map(|id| g.nt(*id).name.as_str()).collect();
        assert_eq!(order, ["T", "B", "S"]);
        assert_eq!(write_grammar(&g), LIBRARY_SLT);
        let again = parse_grammar(&write_grammar(&g)).unwrap();
        assert_eq!(write_grammar(&again), LIBRARY_SLT);
    }

    #[test]
    fn parses_single_rule() {
        let g = parse_grammar("S -> a(_,_)").unwrap();
        assert_eq!(g.nt_count(), 1);
        assert_eq!(g.size(), 2);
        let b = g.expand(100).unwrap();
        assert_eq!(b.labeled_count(), 1);
    }

    #[test]
    fn parses_marked_labels() {
        let g = parse_grammar("S -> ^a(a(_,_),_)").unwrap();
        let b = g.expand(100).unwrap();
        assert_eq!(b.marked_preorder(), [1]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = parse_grammar("# start rule\n\nS -> a(_,_)\n").unwrap();
        assert_eq!(g.nt_count(), 1);
    }

    #[test]
    fn expand_library_matches_serialization() {
        let g = parse_grammar(LIBRARY_SLT).unwrap();
        let b = g.expand(1000).unwrap();
        assert_eq!(b.labeled_count(), 7);
        assert_eq!(b.underscore_count(), 8);
        assert_eq!(
            xml::subtree_to_string(&b, b.root().unwrap(), "^"),
            "<lib><book><title></title><author></author></book>\
             <book><title></title><author></author></book></lib>"
                .replace("             ", "")
        );
    }

    #[test]
    fn expand_nonterminal_keeps_parameters() {
        let g = parse_grammar(LIBRARY_SLT).unwrap();
        let b = g.nt_by_name("B").unwrap();
        let body = g.expand_nt(b, 1000).unwrap();
        assert_eq!(text::render_term(&body, |_| unreachable!()), "book(title(_,author(_,_)),y1)");
        let t = g.nt_by_name("T").unwrap();
        let body = g.expand_nt(t, 1000).unwrap();
        assert_eq!(text::render_term(&body, |_| unreachable!()), "title(_,author(_,_))");
    }

    #[test]
    fn doubling_chain_expands_exponentially() {
        let g = parse_grammar(&doubling_text(3)).unwrap();
        let b = g.expand(1_000).unwrap();
        assert_eq!(b.labeled_count(), 16);
        // All nodes line up on the left spine.
        let mut cur = b.root();
        let mut depth = 0;
        while let Some(id) = cur {
            assert_eq!(b.node(id).label.text(), "a");
            assert_eq!(b.node(id).right, None);
            cur = b.node(id).left;
            depth += 1;
        }
        assert_eq!(depth, 16);
        assert!(matches!(
            g.expand(10),
            Err(crate::error::Error::ExpansionLimit { .. })
        ));
        let counts = g.labeled_counts().unwrap();
        assert_eq!(counts[g.start().0 as usize], num_bigint::BigUint::from(16u32));
    }

    #[test]
    fn validate_detects_cycles() {
        let g = parse_grammar_unchecked("A -> B\nB -> A").unwrap();
        let v = g.validate();
        assert!(v.iter().any(|v| v.message.contains("cyclic")), "{v:?}");
        assert!(parse_grammar("A -> B\nB -> A").is_err());
    }

    #[test]
    fn validate_detects_param_order() {
        let g = parse_grammar_unchecked("S -> F(a(_,_),b(_,_))\nF(y1,y2) -> f(y2,y1)").unwrap();
        let v = g.validate();
        assert!(v.iter().any(|v| v.message.contains("pre-order")), "{v:?}");
    }

    #[test]
    fn validate_detects_unreachable_and_arity() {
        let g = parse_grammar_unchecked("S -> a(_,_)\nX -> b(_,_)").unwrap();
        let v = g.validate();
        assert!(v.iter().any(|v| v.message.contains("not reachable")), "{v:?}");
        assert_eq!(write_grammar(&g.remove_unreachable()), "S -> a(_,_)\n");

        let g = parse_grammar_unchecked("S -> B(a(_,_),b(_,_))\nB(y1) -> c(y1,_)").unwrap();
        let v = g.validate();
        assert!(v.iter().any(|v| v.message.contains("children")), "{v:?}");
    }

    #[test]
    fn validate_accepts_library() {
        let g = parse_grammar_unchecked(LIBRARY_SLT).unwrap();
        assert!(g.validate().is_empty());
    }

    #[test]
    fn remove_unreachable_is_identity_on_connected() {
        let g = parse_grammar(LIBRARY_SLT).unwrap();
        assert_eq!(write_grammar(&g.remove_unreachable()), LIBRARY_SLT);
    }

    #[test]
    fn canonical_form_ignores_names() {
        let a = parse_grammar(LIBRARY_SLT).unwrap();
        let b = parse_grammar(
            "Root -> lib(Chunk(Chunk(_)),_)\nChunk(y1) -> book(Inner,y1)\nInner -> title(_,author(_,_))",
        )
        .unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
        let c = parse_grammar("S -> lib(B(B(_)),_)\nB(y1) -> book(T,y1)\nT -> title(_,title(_,_))")
            .unwrap();
        assert_ne!(a.canonical_form(), c.canonical_form());
    }

    #[test]
    fn label_named_like_parameter_roundtrips() {
        // An element literally named y1 in a rank-0 rule.
        let g = parse_grammar("S -> y1(a(_,_),_)").unwrap();
        let b = g.expand(100).unwrap();
        assert_eq!(b.node(b.root().unwrap()).label.text(), "y1");
        let again = parse_grammar(&write_grammar(&g)).unwrap();
        assert_eq!(g.canonical_form(), again.canonical_form());
    }

    pub(crate) mod dag {
        use super::super::*;
        use crate::tree::tests::library_bin;
        use crate::tree::Label;

        #[test]
        fn shares_repeated_subtrees() {
            let b = library_bin();
            let g = build_dag(&b);
            assert_eq!(g.expand(1000).unwrap(), b);
            assert!(g.validate().is_empty());
            assert!(g.size() <= b.edge_size());
            assert_eq!(
                write_grammar(&g),
                "S -> library(book(D1,book(D1,_)),_)\nD1 -> title(_,D2)\nD2 -> author(_,_)\n"
            );
        }

        #[test]
        fn no_sharing_when_labels_distinct() {
            let t = crate::xml::parse_xml("<a><b/><c/></a>", false).unwrap();
            let b = crate::tree::fcns_encode(&t);
            let g = build_dag(&b);
            assert_eq!(g.nt_count(), 1);
            assert_eq!(g.size(), b.edge_size());
            assert_eq!(g.expand(1000).unwrap(), b);
        }

        /// Complete binary tree with levels 0..=d, all labeled `a`.
        pub(crate) fn complete_tree(d: u32) -> BinTree {
            let mut b = BinTree::new();
            let a = || Label::new("a").unwrap();
            let mut level: Vec<_> = (0..1u32 << d).map(|_| b.push(a(), None, None)).collect();
            for k in (0..d).rev() {
                level = (0..1usize << k)
                    .map(|i| b.push(a(), Some(level[2 * i]), Some(level[2 * i + 1])))
                    .collect();
            }
            b.set_root(Some(level[0]));
            b
        }

        #[test]
        fn complete_tree_compresses_logarithmically() {
            for d in 1..=6u32 {
                let b = complete_tree(d);
                let g = build_dag(&b);
                assert_eq!(g.nt_count() as u32, d + 1, "levels 0..={d}");
                assert_eq!(g.expand(1 << (d + 2)).unwrap(), b);
            }
        }

        #[test]
        fn dag_of_underscore_tree() {
            let b = BinTree::underscore();
            let g = build_dag(&b);
            assert_eq!(g.expand(10).unwrap(), b);
        }

        #[test]
        fn element_named_like_start_is_mangled() {
            let t = crate::xml::parse_xml("<S><S/><S/></S>", false).unwrap();
            let b = crate::tree::fcns_encode(&t);
            let g = build_dag(&b);
            assert_eq!(g.expand(100).unwrap(), b);
            let reparsed = parse_grammar(&write_grammar(&g)).unwrap();
            assert_eq!(reparsed.expand(100).unwrap(), b);
        }
    }

    mod nnf {
        use super::super::*;

        #[test]
        fn splits_nested_labels() {
            let g = parse_grammar("S -> a(b(_,_),_)").unwrap();
            let n = node_normal_form(&g).unwrap();
            let expected = parse_grammar("S -> a(B,_)\nB -> b(_,_)").unwrap();
            assert_eq!(n.canonical_form(), expected.canonical_form());
            assert_eq!(n.size(), g.size());
            assert_eq!(n.expand(100).unwrap(), g.expand(100).unwrap());
        }

        #[test]
        fn idempotent_and_size_preserving_on_dag_output() {
            let b = crate::tree::tests::library_bin();
            let g = build_dag(&b);
            let n = node_normal_form(&g).unwrap();
            assert!(n.validate().is_empty());
            assert_eq!(n.size(), g.size());
            assert_eq!(n.expand(1000).unwrap(), b);
            for id in n.nt_ids() {
                let labels = n
                    .rule(id)
                    .preorder()
                    .iter()
                    .filter(|nid| matches!(n.rule(id).node(**nid), RhsNode::Label { .. }))
                    .count();
                assert_eq!(labels, 1, "rule {} must contain exactly one label", n.nt(id).name);
            }
            let again = node_normal_form(&n).unwrap();
            assert_eq!(again.canonical_form(), n.canonical_form());
        }

        #[test]
        fn unique_nonterminal_per_subtree() {
            let b = super::dag::complete_tree(4);
            let g = build_dag(&b);
            let n = node_normal_form(&g).unwrap();
            // Distinct subtrees of a complete binary tree: one per level.
            assert_eq!(n.nt_count(), 5);
            assert_eq!(n.expand(100).unwrap(), b);
        }

        #[test]
        fn merges_duplicate_rules_of_foreign_grammars() {
            let g = parse_grammar("S -> a(b(_,_),B)\nB -> b(_,_)").unwrap();
            let n = node_normal_form(&g).unwrap();
            assert_eq!(n.nt_count(), 2);
            assert_eq!(n.expand(100).unwrap(), g.expand(100).unwrap());
        }

        #[test]
        fn eliminates_chain_rules() {
            let g = parse_grammar("S -> A\nA -> a(_,_)").unwrap();
            let n = node_normal_form(&g).unwrap();
            assert_eq!(n.nt_count(), 1);
            assert_eq!(n.expand(100).unwrap(), g.expand(100).unwrap());
        }

        #[test]
        fn rejects_ranked_grammars() {
            let g = parse_grammar(super::LIBRARY_SLT).unwrap();
            assert!(matches!(
                node_normal_form(&g),
                Err(crate::error::Error::NotRankZero { rank: 1 })
            ));
        }
    }
}
