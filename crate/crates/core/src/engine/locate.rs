//! Chunk-length descent: navigating from a pre-order number to its node
//! inside the grammar, without expansion.
//!
//! A focus is a rule-body node plus an environment binding the enclosing
//! parameters to the argument subtrees they were instantiated with
//! (closures into outer rules). Descent walks rule bodies, steering by
//! labeled-node counts; each environment carries prefix sums of its
//! closure counts so subtree counts cost O(1) per step. The walk enters
//! each rule body node at most once per located id, so a single descent is
//! O(|G|) even when the expansion is astronomically deep.

use super::chunks::build_chunks;
use crate::error::Result;
use crate::grammar::{NtId, RhsId, RhsNode, RhsTree, SltGrammar};
use crate::tree::Label;
use num_bigint::BigUint;
use std::io::Write;

/// A body node viewed under a parameter environment.
#[derive(Debug, Clone, Copy)]
pub(super) struct Closure {
    pub rule: NtId,
    pub node: RhsId,
    pub env: usize,
}

struct Env {
    closures: Vec<Closure>,
    /// prefix[i] = labeled-node count of closures 0..i; empty for
    /// environments built during emission, which never consult counts.
    prefix: Vec<BigUint>,
}

struct RuleMeta {
    /// Labeled-node count of the subtree at each body node, parameters
    /// counting zero (occurrences contribute their full totals).
    static_count: Vec<BigUint>,
    /// Contiguous parameter range `[lo, hi)` inside each subtree.
    param_range: Vec<(u32, u32)>,
}

pub(super) struct LocateCtx<'g> {
    pub g: &'g SltGrammar,
    /// Labeled-node count of `val(A)` without parameter content.
    pub totals: Vec<BigUint>,
    meta: Vec<RuleMeta>,
    envs: Vec<Env>,
}

const EMPTY_ENV: usize = 0;

impl<'g> LocateCtx<'g> {
    pub fn new(g: &'g SltGrammar) -> Result<LocateCtx<'g>> {
        let chunk_counts = build_chunks(g)?;
        let totals: Vec<BigUint> = g.nt_ids().map(|nt| chunk_counts.total(nt)).collect();
        let mut meta = Vec::with_capacity(g.nt_count());
        for nt in g.nt_ids() {
            let body = g.rule(nt);
            let n = body.node_count() as usize;
            let mut static_count = vec![BigUint::from(0u32); n];
            let mut param_range = vec![(u32::MAX, 0u32); n];
            for id in body.preorder().into_iter().rev() {
                let i = id.0 as usize;
                let merge = |range: &mut (u32, u32), other: (u32, u32)| {
                    range.0 = range.0.min(other.0);
                    range.1 = range.1.max(other.1);
                };
                match body.node(id) {
                    RhsNode::Underscore => {}
                    RhsNode::Param(p) => param_range[i] = (*p, *p + 1),
                    RhsNode::Label { left, right, .. } => {
                        let sum = &static_count[left.0 as usize] + &static_count[right.0 as usize];
                        static_count[i] = sum + 1u32;
                        let (l, r) = (param_range[left.0 as usize], param_range[right.0 as usize]);
                        merge(&mut param_range[i], l);
                        merge(&mut param_range[i], r);
                    }
                    RhsNode::Nt { nt: b, children } => {
                        let mut sum = totals[b.0 as usize].clone();
                        for c in children {
                            sum += &static_count[c.0 as usize];
                            let r = param_range[c.0 as usize];
                            merge(&mut param_range[i], r);
                        }
                        static_count[i] = sum;
                    }
                }
            }
            meta.push(RuleMeta { static_count, param_range });
        }
        Ok(LocateCtx {
            g,
            totals,
            meta,
            envs: vec![Env { closures: Vec::new(), prefix: vec![BigUint::from(0u32)] }],
        })
    }

    /// Labeled-node count of the subtree at `c`, parameter content included.
    fn count_at(&self, c: Closure) -> BigUint {
        let m = &self.meta[c.rule.0 as usize];
        let (lo, hi) = m.param_range[c.node.0 as usize];
        let mut total = m.static_count[c.node.0 as usize].clone();
        if lo < hi {
            let prefix = &self.envs[c.env].prefix;
            total += &prefix[hi as usize] - &prefix[lo as usize];
        }
        total
    }

    fn push_env(&mut self, rule: NtId, env: usize, children: &[RhsId], counted: bool) -> usize {
        let closures: Vec<Closure> =
            children.iter().map(|&node| Closure { rule, node, env }).collect();
        let prefix = if counted {
            let mut prefix = Vec::with_capacity(closures.len() + 1);
            let mut acc = BigUint::from(0u32);
            prefix.push(acc.clone());
            for c in &closures {
                acc += self.count_at(*c);
                prefix.push(acc.clone());
            }
            prefix
        } else {
            Vec::new()
        };
        self.envs.push(Env { closures, prefix });
        self.envs.len() - 1
    }

    /// Discards environments built after `mark`; foci from before stay valid.
    pub fn trim_envs(&mut self, mark: usize) {
        self.envs.truncate(mark.max(1));
    }

    pub fn env_mark(&self) -> usize {
        self.envs.len()
    }

    /// Steers from the start symbol to the labeled node with 1-based
    /// pre-order number `id`; `None` when out of range.
    pub fn locate(&mut self, id: &BigUint) -> Option<Closure> {
        if id.bits() == 0 || *id > self.totals[self.g.start().0 as usize] {
            return None;
        }
        let mut rem = id - 1u32;
        let mut cur = Closure {
            rule: self.g.start(),
            node: self.g.rule(self.g.start()).root(),
            env: EMPTY_ENV,
        };
        loop {
            match self.g.rule(cur.rule).node(cur.node) {
                RhsNode::Underscore => unreachable!("counts never steer into a leaf"),
                RhsNode::Param(i) => {
                    cur = self.envs[cur.env].closures[*i as usize];
                }
                RhsNode::Label { left, right, .. } => {
                    if rem.bits() == 0 {
                        return Some(cur);
                    }
                    rem -= 1u32;
                    let left_count = self.count_at(Closure { node: *left, ..cur });
                    if rem < left_count {
                        cur.node = *left;
                    } else {
                        rem -= left_count;
                        cur.node = *right;
                    }
                }
                RhsNode::Nt { nt: b, children } => {
                    let env = self.push_env(cur.rule, cur.env, children, true);
                    cur = Closure { rule: *b, node: self.g.rule(*b).root(), env };
                }
            }
        }
    }

    /// Streams the XML of the unranked subtree at a located label node: the
    /// node plus its left (first-child) binary subtree; the next-sibling
    /// part is cut.
    pub fn write_unranked_subtree<W: Write>(
        &mut self,
        focus: Closure,
        mark_token: &str,
        out: &mut W,
    ) -> Result<()> {
        enum Emit {
            Node(Closure),
            CloseTag(Label),
        }
        let mark = self.env_mark();
        let RhsNode::Label { label, left, .. } = self.g.rule(focus.rule).node(focus.node) else {
            unreachable!("focus is a labeled node");
        };
        write!(out, "<{}>", label.render(mark_token))?;
        let mut stack = vec![
            Emit::CloseTag(label.clone()),
            Emit::Node(Closure { node: *left, ..focus }),
        ];
        while let Some(item) = stack.pop() {
            match item {
                Emit::CloseTag(l) => write!(out, "</{}>", l.render(mark_token))?,
                Emit::Node(c) => match self.g.rule(c.rule).node(c.node) {
                    RhsNode::Underscore => {}
                    RhsNode::Param(i) => {
                        stack.push(Emit::Node(self.envs[c.env].closures[*i as usize]));
                    }
                    RhsNode::Label { label, left, right } => {
                        write!(out, "<{}>", label.render(mark_token))?;
                        stack.push(Emit::Node(Closure { node: *right, ..c }));
                        stack.push(Emit::CloseTag(label.clone()));
                        stack.push(Emit::Node(Closure { node: *left, ..c }));
                    }
                    RhsNode::Nt { nt: b, children } => {
                        let env = self.push_env(c.rule, c.env, children, false);
                        stack.push(Emit::Node(Closure {
                            rule: *b,
                            node: self.g.rule(*b).root(),
                            env,
                        }));
                    }
                },
            }
        }
        self.trim_envs(mark);
        Ok(())
    }

    /// Copies the unranked subtree at a located node into a standalone
    /// rank-0 rule body over the same grammar: occurrences stay unexpanded,
    /// parameters are spliced with the argument subtrees they were bound
    /// to, and the focus node's next-sibling part becomes `_`. The copy
    /// touches each rule body on the closure chain once, so its size is
    /// O(|G|).
    pub fn copy_unranked_body(&self, focus: Closure) -> RhsTree {
        enum Dest {
            Left(RhsId),
            Right(RhsId),
            Child(RhsId, usize),
        }
        let mut out = RhsTree::new();
        let RhsNode::Label { label, left, .. } = self.g.rule(focus.rule).node(focus.node) else {
            unreachable!("focus is a labeled node");
        };
        let top = out.push(RhsNode::Label {
            label: label.clone(),
            left: RhsId(u32::MAX),
            right: RhsId(u32::MAX),
        });
        out.set_root(top);
        let sib = out.push(RhsNode::Underscore);
        if let RhsNode::Label { right, .. } = out.node_mut(top) {
            *right = sib;
        }
        let mut stack: Vec<(Closure, Dest)> =
            vec![(Closure { node: *left, ..focus }, Dest::Left(top))];
        while let Some((c, dest)) = stack.pop() {
            let new_id = match self.g.rule(c.rule).node(c.node) {
                RhsNode::Underscore => Some(out.push(RhsNode::Underscore)),
                RhsNode::Param(i) => {
                    stack.push((self.envs[c.env].closures[*i as usize], dest));
                    continue;
                }
                RhsNode::Label { label, left, right } => {
                    let id = out.push(RhsNode::Label {
                        label: label.clone(),
                        left: RhsId(u32::MAX),
                        right: RhsId(u32::MAX),
                    });
                    stack.push((Closure { node: *right, ..c }, Dest::Right(id)));
                    stack.push((Closure { node: *left, ..c }, Dest::Left(id)));
                    Some(id)
                }
                RhsNode::Nt { nt: b, children } => {
                    let id = out.push(RhsNode::Nt {
                        nt: *b,
                        children: vec![RhsId(u32::MAX); children.len()],
                    });
                    for (i, ch) in children.iter().enumerate() {
                        stack.push((Closure { node: *ch, ..c }, Dest::Child(id, i)));
                    }
                    Some(id)
                }
            };
            let new_id = new_id.expect("node constructed");
            match dest {
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
        out
    }
}
