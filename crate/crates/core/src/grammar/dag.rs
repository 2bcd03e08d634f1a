//! DAG compression of binary trees and node normal form for rank-0 grammars.

use super::{GrammarBuilder, NtId, RhsId, RhsNode, RhsTree, SltGrammar};
use crate::error::{Error, Result};
use crate::tree::{BinTree, Label};
use std::collections::{HashMap, HashSet};

/// A distinct subtree: its top label and the canonical ids of its children
/// (`None` is the `_` leaf).
type SubtreeKey = (Label, Option<u32>, Option<u32>);

fn fresh_name(base: String, taken: &HashSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) {
        // Leading underscores are impossible in labels, so this cannot
        // collide with element names; uniqueness against other
        // nonterminals follows from distinct bases.
        name.insert(0, '_');
    }
    name
}

/// Compresses a binary tree into a rank-0 grammar by sharing complete
/// identical subtrees: one nonterminal per distinct subtree occurring at
/// least twice, everything else inlined. Expanding the result reproduces
/// the tree exactly, and no two nonterminals expand to equal trees.
pub fn build_dag(b: &BinTree) -> SltGrammar {
    let mut gb = GrammarBuilder::new();
    let Some(root) = b.root() else {
        let s = gb.declare("S", 0).expect("first name");
        gb.set_rule(s, RhsTree::leaf(RhsNode::Underscore));
        return gb.finish(s);
    };

    let order = b.preorder_nodes();
    let mut canon_of: Vec<u32> = vec![u32::MAX; order.len()];
    let mut table: HashMap<SubtreeKey, u32> = HashMap::new();
    let mut entries: Vec<SubtreeKey> = Vec::new();
    let mut occurrences: Vec<u32> = Vec::new();
    let mut first_pre: Vec<usize> = Vec::new();
    // Reverse pre-order: children are canonicalized before their parents.
    for (pre, id) in order.iter().enumerate().rev() {
        let n = b.node(*id);
        let key = (
            n.label.clone(),
            n.left.map(|c| canon_of[c.0 as usize]),
            n.right.map(|c| canon_of[c.0 as usize]),
        );
        let cid = *table.entry(key.clone()).or_insert_with(|| {
            entries.push(key);
            occurrences.push(0);
            first_pre.push(pre);
            entries.len() as u32 - 1
        });
        occurrences[cid as usize] += 1;
        first_pre[cid as usize] = pre;
        canon_of[id.0 as usize] = cid;
    }

    let label_texts: HashSet<String> = entries
        .iter()
        .filter(|(l, _, _)| !l.is_marked())
        .map(|(l, _, _)| l.text().to_string())
        .collect();

    let mut shared: Vec<u32> = (0..entries.len() as u32)
        .filter(|cid| occurrences[*cid as usize] >= 2)
        .collect();
    shared.sort_by_key(|cid| first_pre[*cid as usize]);

    let start = gb.declare(fresh_name("S".into(), &label_texts), 0).expect("fresh name");
    let mut nt_of: HashMap<u32, NtId> = HashMap::new();
    for (i, cid) in shared.iter().enumerate() {
        let name = fresh_name(format!("D{}", i + 1), &label_texts);
        nt_of.insert(*cid, gb.declare(name, 0).expect("fresh name"));
    }

    // Rule body for a canonical subtree: shared children become occurrences,
    // unshared children are inlined.
    let build_body = |nt_of: &HashMap<u32, NtId>, top: u32| -> RhsTree {
        enum Dest {
            Root,
            Left(RhsId),
            Right(RhsId),
        }
        let mut out = RhsTree::new();
        let mut tasks = vec![(top, Dest::Root)];
        while let Some((cid, dest)) = tasks.pop() {
            let (label, lc, rc) = entries[cid as usize].clone();
            let id = out.push(RhsNode::Label {
                label,
                left: super::PLACEHOLDER,
                right: super::PLACEHOLDER,
            });
            match dest {
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
            }
            for (child, is_left) in [(lc, true), (rc, false)] {
                let slot = match child {
                    None => Some(out.push(RhsNode::Underscore)),
                    Some(c) => match nt_of.get(&c) {
                        Some(nt) => Some(out.push(RhsNode::Nt { nt: *nt, children: Vec::new() })),
                        None => {
                            tasks.push((c, if is_left { Dest::Left(id) } else { Dest::Right(id) }));
                            None
                        }
                    },
                };
                if let Some(s) = slot {
                    if let RhsNode::Label { left, right, .. } = out.node_mut(id) {
                        if is_left {
                            *left = s;
                        } else {
                            *right = s;
                        }
                    }
                }
            }
        }
        out
    };

    gb.set_rule(start, build_body(&nt_of, canon_of[root.0 as usize]));
    for cid in &shared {
        gb.set_rule(nt_of[cid], build_body(&nt_of, *cid));
    }
    gb.finish(start)
}

/// Brings a valid rank-0 grammar into node normal form: every rule body is a
/// single label whose children are nonterminals or `_`, and every subtree of
/// the derived tree is represented by exactly one nonterminal.
///
/// Structurally identical rules are merged and bare-nonterminal chain rules
/// eliminated; for duplicate-free inputs (such as [`build_dag`] output) the
/// grammar size is unchanged.
pub fn node_normal_form(g: &SltGrammar) -> Result<SltGrammar> {
    if g.rank() != 0 {
        return Err(Error::NotRankZero { rank: g.rank() });
    }
    let order = g.topo_order()?;

    let mut label_texts: HashSet<String> = HashSet::new();
    for id in g.nt_ids() {
        let body = g.rule(id);
        for nid in body.preorder() {
            if let RhsNode::Label { label, .. } = body.node(nid) {
                if !label.is_marked() {
                    label_texts.insert(label.text().to_string());
                }
            }
        }
    }

    let mut gb = GrammarBuilder::new();
    let mut taken = label_texts;
    let mut table: HashMap<SubtreeKey, NtId> = HashMap::new();
    let mut bodies: Vec<(NtId, SubtreeKey)> = Vec::new();
    // Canonical subtree of val(A), None when A derives a bare `_`.
    let mut nt_canon: Vec<Option<NtId>> = vec![None; g.nt_count()];
    let mut fresh_counter = 0u32;

    for a in order {
        let body = g.rule(a);
        let pre = body.preorder();
        let mut canon: Vec<Option<NtId>> = vec![None; body.node_count() as usize];
        for nid in pre.iter().rev() {
            let is_root = *nid == body.root();
            match body.node(*nid) {
                RhsNode::Underscore => {}
                RhsNode::Param(_) => unreachable!("rank-0 grammar has no parameters"),
                RhsNode::Nt { nt, .. } => canon[nid.0 as usize] = nt_canon[nt.0 as usize],
                RhsNode::Label { label, left, right } => {
                    let key = (
                        label.clone(),
                        canon[left.0 as usize].map(|n| n.0),
                        canon[right.0 as usize].map(|n| n.0),
                    );
                    let out_nt = match table.get(&key) {
                        Some(n) => *n,
                        None => {
                            let base = if is_root {
                                g.nt(a).name.clone()
                            } else {
                                fresh_counter += 1;
                                format!("N{fresh_counter}")
                            };
                            let name = fresh_name(base, &taken);
                            taken.insert(name.clone());
                            let n = gb.declare(name, 0).expect("fresh name");
                            table.insert(key.clone(), n);
                            bodies.push((n, key));
                            n
                        }
                    };
                    canon[nid.0 as usize] = Some(out_nt);
                }
            }
        }
        nt_canon[a.0 as usize] = canon[body.root().0 as usize];
    }

    for (nt, (label, lc, rc)) in bodies {
        let mut out = RhsTree::new();
        let child = |out: &mut RhsTree, c: Option<u32>| match c {
            None => out.push(RhsNode::Underscore),
            Some(n) => out.push(RhsNode::Nt { nt: NtId(n), children: Vec::new() }),
        };
        let l = child(&mut out, lc);
        let r = child(&mut out, rc);
        let root = out.push(RhsNode::Label { label, left: l, right: r });
        out.set_root(root);
        gb.set_rule(nt, out);
    }

    match nt_canon[g.start().0 as usize] {
        Some(start) => Ok(gb.finish(start)),
        None => {
            // The grammar derives the bare `_` tree; keep it verbatim.
            let mut gb = GrammarBuilder::new();
            let s = gb.declare(g.nt(g.start()).name.clone(), 0).expect("first name");
            gb.set_rule(s, RhsTree::leaf(RhsNode::Underscore));
            Ok(gb.finish(s))
        }
    }
}
