//! Brute-force reference implementations and seeded generators.
//!
//! Everything here works on explicit trees and is deliberately naive; the
//! compressed evaluation paths are tested against these.

use crate::grammar::{GrammarBuilder, NtId, RhsId, RhsNode, RhsTree, SltGrammar};
use crate::tree::{UNodeId, UnrankedNode, UnrankedTree};
use crate::xpath::{Axis, NodeTest, Step, XPathQuery};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Direct node-set evaluation of a query on an unranked tree: child picks
/// all children, descendant all proper descendants, following-sibling all
/// later siblings; tests filter. The initial context is a virtual
/// super-root whose only child is the document root. Returns the 1-based
/// document-order numbers of the selected nodes, ascending.
pub fn naive_eval(q: &XPathQuery, t: &UnrankedTree) -> Vec<u64> {
    let order = t.preorder_nodes();
    let mut parent: Vec<Option<UNodeId>> = vec![None; t.node_count()];
    for &u in &order {
        for &c in &t.node(u).children {
            parent[c.0 as usize] = Some(u);
        }
    }
    let descendants = |u: UNodeId| -> Vec<UNodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<UNodeId> = t.node(u).children.clone();
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(t.node(v).children.iter().copied());
        }
        out
    };
    let matches = |test: &NodeTest, u: UNodeId| match test {
        NodeTest::Wildcard => true,
        NodeTest::Name(n) => t.node(u).label.text() == n,
    };

    let mut ctx: BTreeSet<u32> = BTreeSet::new();
    for (i, step) in q.steps.iter().enumerate() {
        let mut next: BTreeSet<u32> = BTreeSet::new();
        if i == 0 {
            match step.axis {
                Axis::Child => next.insert(t.root().0),
                Axis::Descendant => {
                    next.extend(order.iter().map(|u| u.0));
                    true
                }
                Axis::FollowingSibling => {
                    unreachable!("queries cannot begin with following-sibling")
                }
            };
        } else {
            for &u in &ctx {
                let u = UNodeId(u);
                match step.axis {
                    Axis::Child => next.extend(t.node(u).children.iter().map(|c| c.0)),
                    Axis::Descendant => next.extend(descendants(u).iter().map(|c| c.0)),
                    Axis::FollowingSibling => {
                        if let Some(p) = parent[u.0 as usize] {
                            let siblings = &t.node(p).children;
                            let pos = siblings.iter().position(|s| *s == u).expect("child of parent");
                            next.extend(siblings[pos + 1..].iter().map(|s| s.0));
                        }
                    }
                }
            }
        }
        next.retain(|u| matches(&step.test, UNodeId(*u)));
        ctx = next;
    }

    let pre = t.preorder_ids();
    let mut ids: Vec<u64> = ctx.iter().map(|u| pre[*u as usize].0).collect();
    ids.sort_unstable();
    ids
}

/// A reproducible random document tree with up to `max_nodes` nodes.
pub fn random_tree(seed: u64, max_nodes: usize, alphabet: &[&str]) -> UnrankedTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7265_6531);
    let n = rng.gen_range(1..=max_nodes.max(1));
    let mut nodes: Vec<UnrankedNode> = Vec::with_capacity(n);
    for i in 0..n {
        let label = alphabet[rng.gen_range(0..alphabet.len())];
        nodes.push(UnrankedNode {
            label: crate::tree::Label::new(label).expect("alphabet labels are valid"),
            children: Vec::new(),
        });
        if i > 0 {
            // Attaching to a recent parent keeps trees reasonably deep.
            let lo = i.saturating_sub(1 + rng.gen_range(0..8));
            let p = rng.gen_range(lo..i);
            let child = UNodeId(i as u32);
            nodes[p].children.push(child);
        }
    }
    UnrankedTree::from_arena(nodes, UNodeId(0))
}

/// A reproducible random query over the alphabet: 1..=max_steps steps, the
/// first axis child or descendant, later ones any of the three, with a
/// sprinkling of wildcards.
pub fn random_query(seed: u64, max_steps: usize, alphabet: &[&str]) -> XPathQuery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7175_6572);
    let n = rng.gen_range(1..=max_steps.max(1));
    let mut steps = Vec::with_capacity(n);
    for i in 0..n {
        let axis = if i == 0 {
            if rng.gen_bool(0.5) {
                Axis::Child
            } else {
                Axis::Descendant
            }
        } else {
            match rng.gen_range(0..10) {
                0..=3 => Axis::Child,
                4..=6 => Axis::Descendant,
                _ => Axis::FollowingSibling,
            }
        };
        let test = if rng.gen_bool(0.15) {
            NodeTest::Wildcard
        } else {
            NodeTest::Name(alphabet[rng.gen_range(0..alphabet.len())].to_string())
        };
        steps.push(Step { axis, test });
    }
    XPathQuery { steps }
}

const MAX_GEN_DEPTH: u32 = 6;

struct GrammarGen<'a> {
    rng: ChaCha8Rng,
    alphabet: &'a [&'a str],
    /// Nonterminals available for reference: (id, rank, labeled count).
    refs: Vec<(NtId, u32, u64)>,
}

impl GrammarGen<'_> {
    fn label(&mut self) -> crate::tree::Label {
        let l = self.alphabet[self.rng.gen_range(0..self.alphabet.len())];
        crate::tree::Label::new(l).expect("alphabet labels are valid")
    }

    /// Generates a term embedding parameters `params.0..params.1` in
    /// pre-order; `remaining` is a soft labeled-node budget, decremented by
    /// this term's expansion count.
    fn gen_term(
        &mut self,
        out: &mut RhsTree,
        params: (u32, u32),
        depth: u32,
        remaining: &mut u64,
    ) -> RhsId {
        let span = params.1 - params.0;
        let exhausted = depth >= MAX_GEN_DEPTH || *remaining == 0;
        if span == 0 && (exhausted || self.rng.gen_bool(0.3)) {
            return out.push(RhsNode::Underscore);
        }
        if span == 1 && (exhausted || self.rng.gen_bool(0.35)) {
            return out.push(RhsNode::Param(params.0));
        }
        // Prefer sharing through references when one fits the budget; a
        // reference needs children to route parameters through.
        let candidates: Vec<(NtId, u32, u64)> = self
            .refs
            .iter()
            .filter(|(_, rank, count)| *count <= *remaining && (span == 0 || *rank >= 1))
            .copied()
            .collect();
        if !candidates.is_empty() && !exhausted && self.rng.gen_bool(0.45) {
            let (nt, rank, count) = candidates[self.rng.gen_range(0..candidates.len())];
            *remaining = remaining.saturating_sub(count);
            let mut children = Vec::with_capacity(rank as usize);
            if rank > 0 {
                // Ordered split of the parameter range into rank parts.
                let mut cuts: Vec<u32> = (0..rank - 1)
                    .map(|_| self.rng.gen_range(params.0..=params.1))
                    .collect();
                cuts.sort_unstable();
                let mut lo = params.0;
                for hi in cuts.into_iter().chain(std::iter::once(params.1)) {
                    children.push(self.gen_term(out, (lo, hi), depth + 1, remaining));
                    lo = hi;
                }
            }
            return out.push(RhsNode::Nt { nt, children });
        }
        // A labeled node; split the parameters between the two children.
        *remaining = remaining.saturating_sub(1);
        let cut = params.0 + self.rng.gen_range(0..=span);
        let label = self.label();
        let left = self.gen_term(out, (params.0, cut), depth + 1, remaining);
        let right = self.gen_term(out, (cut, params.1), depth + 1, remaining);
        out.push(RhsNode::Label { label, left, right })
    }

    fn gen_body(&mut self, rank: u32, budget: u64) -> (RhsTree, u64) {
        let mut out = RhsTree::new();
        let mut remaining = budget;
        let root = self.gen_term(&mut out, (0, rank), 0, &mut remaining);
        out.set_root(root);
        (out, budget - remaining.min(budget))
    }
}

/// A reproducible random valid grammar whose expansion is a document tree
/// (the root has no sibling) of at most roughly `node_budget` labeled
/// nodes. Generation biases toward shared nonterminals and repeated labels
/// so compression and default-rule paths are exercised. The alphabet must
/// not contain the generated rule names `S`, `R1`, `R2`, ...
pub fn random_grammar(
    seed: u64,
    max_rules: usize,
    max_rank: u32,
    alphabet: &[&str],
    node_budget: u64,
) -> SltGrammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_616d);
    let extra = rng.gen_range(0..max_rules.max(1));
    let mut gb = GrammarBuilder::new();
    let start = gb.declare("S", 0).expect("fresh name");
    let mut ids = Vec::with_capacity(extra);
    for i in 0..extra {
        let rank = rng.gen_range(0..=max_rank);
        ids.push(gb.declare(format!("R{}", i + 1), rank).expect("fresh name"));
    }
    let mut gen = GrammarGen { rng, alphabet, refs: Vec::new() };
    // Last-declared first, so every rule may reference the ones below it.
    for &id in ids.iter().rev() {
        let rank = gb.rank(id);
        let (body, count) = gen.gen_body(rank, node_budget / 4);
        gb.set_rule(id, body);
        gen.refs.push((id, rank, count.max(1)));
    }
    // The start rule pins a root element with an `_` sibling slot so the
    // expansion is a document.
    let mut body = RhsTree::new();
    let mut remaining = node_budget.saturating_sub(1);
    let label = gen.label();
    let left = gen.gen_term(&mut body, (0, 0), 1, &mut remaining);
    let right = body.push(RhsNode::Underscore);
    let root = body.push(RhsNode::Label { label, left, right });
    body.set_root(root);
    gb.set_rule(start, body);

    let g = gb.finish(start).remove_unreachable();
    debug_assert!(g.validate().is_empty(), "generator must produce valid grammars");
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xpath::parse_xpath;

    fn library() -> UnrankedTree {
        crate::xml::parse_xml(
            "<library><book><title/><author/></book><book><title/><author/></book></library>",
            false,
        )
        .unwrap()
    }

    #[test]
    fn naive_eval_examples() {
        let t = library();
        assert_eq!(naive_eval(&parse_xpath("//book").unwrap(), &t), [2, 5]);
        assert_eq!(naive_eval(&parse_xpath("/library/book/title").unwrap(), &t), [3, 6]);
        assert_eq!(naive_eval(&parse_xpath("/nosuch//x").unwrap(), &t), [] as [u64; 0]);
        assert_eq!(naive_eval(&parse_xpath("//title/following-sibling::author").unwrap(), &t), [4, 7]);
        assert_eq!(naive_eval(&parse_xpath("/*").unwrap(), &t), [1]);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_grammar(42, 8, 2, &["a", "b"], 500);
        let b = random_grammar(42, 8, 2, &["a", "b"], 500);
        assert_eq!(crate::grammar::write_grammar(&a), crate::grammar::write_grammar(&b));
        let qa = random_query(7, 5, &["a", "b"]);
        let qb = random_query(7, 5, &["a", "b"]);
        assert_eq!(qa, qb);
        let ta = random_tree(9, 50, &["a"]);
        let tb = random_tree(9, 50, &["a"]);
        assert_eq!(ta, tb);
    }

    #[test]
    fn generated_grammars_are_valid_documents() {
        for seed in 0..60 {
            let g = random_grammar(seed, 10, 3, &["a", "b", "c", "d"], 2_000);
            assert!(g.validate().is_empty(), "seed {seed}");
            let b = g.expand(200_000).unwrap();
            assert!(b.root().is_some());
            // Root has no sibling: the expansion decodes as a document.
            crate::tree::fcns_decode(&b).unwrap_or_else(|_| panic!("seed {seed} not a document"));
        }
    }

    #[test]
    fn rank_zero_request_yields_rank_zero() {
        for seed in 0..20 {
            let g = random_grammar(seed, 8, 0, &["a", "b"], 500);
            assert_eq!(g.rank(), 0, "seed {seed}");
        }
    }

    #[test]
    fn single_step_queries() {
        for seed in 0..20 {
            let q = random_query(seed, 1, &["a", "b"]);
            assert_eq!(q.steps.len(), 1);
            assert_ne!(q.steps[0].axis, Axis::FollowingSibling);
        }
    }
}
