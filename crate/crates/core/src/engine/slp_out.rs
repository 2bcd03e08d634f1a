//! Compressed (SLP) output of serializations.
//!
//! A tree grammar turns into a string grammar for its pre-order
//! serialization by giving every nonterminal one SLP nonterminal per chunk:
//! the chunk's rule emits an opening bracket on first visit of a labeled
//! node, the closing bracket on leaving it, nothing for `_`, and the chunk
//! nonterminals of nested occurrences in between. Concatenated result
//! subtrees reuse this machinery over standalone sentential rules (one per
//! result node) or, for rank-0 grammars in node normal form, over the
//! grammar itself viewed as a string grammar.

use super::locate::LocateCtx;
use super::ResultSet;
use crate::error::{Error, Result};
use crate::grammar::{node_normal_form, NtId, RhsId, RhsNode, RhsTree, SltGrammar};
use crate::slp::{Slp, SlpBuilder, SlpNtId, SlpSym, SlpToken};
use crate::tree::Label;
use num_bigint::BigUint;

fn declare_fresh(sb: &mut SlpBuilder, base: String) -> SlpNtId {
    let mut name = base;
    while sb.lookup(&name).is_some() {
        name.push('_');
    }
    sb.declare(name).expect("name is fresh")
}

/// Splits the token stream of one rule body at its parameter leaves,
/// emitting nested occurrences as their chunk nonterminals.
fn chunk_sequences(body: &RhsTree, slp_id: &impl Fn(NtId, usize) -> SlpNtId) -> Vec<Vec<SlpSym>> {
    enum Work {
        Node(RhsId),
        Close(Label),
        NtSym(NtId, usize),
    }
    let mut out = Vec::new();
    let mut cur: Vec<SlpSym> = Vec::new();
    let mut stack = vec![Work::Node(body.root())];
    while let Some(item) = stack.pop() {
        match item {
            Work::Close(l) => cur.push(SlpSym::Tok(SlpToken::Close(l))),
            Work::NtSym(b, c) => cur.push(SlpSym::Nt(slp_id(b, c))),
            Work::Node(id) => match body.node(id) {
                RhsNode::Underscore => {}
                RhsNode::Param(_) => out.push(std::mem::take(&mut cur)),
                RhsNode::Label { label, left, right } => {
                    cur.push(SlpSym::Tok(SlpToken::Open(label.clone())));
                    stack.push(Work::Node(*right));
                    stack.push(Work::Close(label.clone()));
                    stack.push(Work::Node(*left));
                }
                RhsNode::Nt { nt: b, children } => {
                    stack.push(Work::NtSym(*b, children.len()));
                    for (i, c) in children.iter().enumerate().rev() {
                        stack.push(Work::Node(*c));
                        stack.push(Work::NtSym(*b, i));
                    }
                }
            },
        }
    }
    out.push(cur);
    out
}

/// Declares one SLP nonterminal per (grammar nonterminal, chunk) pair,
/// named `name.chunk`.
fn declare_chunk_ids(sb: &mut SlpBuilder, g: &SltGrammar) -> Vec<Vec<SlpNtId>> {
    g.nt_ids()
        .map(|nt| {
            (0..=g.nt(nt).rank)
                .map(|c| declare_fresh(sb, format!("{}.{}", g.nt(nt).name, c)))
                .collect()
        })
        .collect()
}

/// The SLP generating the pre-order serialization token stream of
/// `val(G)`: one nonterminal per (nonterminal, chunk), rule sizes summing
/// to O(|G|).
pub fn slt_to_slp(g: &SltGrammar) -> Result<Slp> {
    g.ensure_valid()?;
    let mut sb = SlpBuilder::new();
    let ids = declare_chunk_ids(&mut sb, g);
    for nt in g.nt_ids() {
        let seqs = chunk_sequences(g.rule(nt), &|b, c| ids[b.0 as usize][c]);
        for (c, seq) in seqs.into_iter().enumerate() {
            sb.set_rule(ids[nt.0 as usize][c], seq);
        }
    }
    let slp = sb.finish(ids[g.start().0 as usize][0]);
    debug_assert!(slp.validate().is_empty());
    Ok(slp)
}

fn check_range(u: &BigUint, total: &BigUint) -> Result<()> {
    if u.bits() == 0 || u > total {
        return Err(Error::ResultOutOfRange { id: u.to_string(), total: total.to_string() });
    }
    Ok(())
}

/// An SLP for the concatenation, in pre-order, of the serializations of the
/// subtrees at the given result nodes. Each node contributes one sentential
/// rule of size O(|G|) found by chunk-length descent, so the whole grammar
/// is O(|G|·|r|).
pub fn subtrees_slp(g: &SltGrammar, r: &ResultSet) -> Result<Slp> {
    g.ensure_valid()?;
    let mut ctx = LocateCtx::new(g)?;
    let total = ctx.totals[g.start().0 as usize].clone();
    let mut bodies = Vec::with_capacity(r.len());
    for u in r.ids() {
        check_range(u, &total)?;
        let mark = ctx.env_mark();
        let focus = ctx.locate(u).expect("id is in range");
        bodies.push(ctx.copy_unranked_body(focus));
        ctx.trim_envs(mark);
    }

    let mut sb = SlpBuilder::new();
    let ids = declare_chunk_ids(&mut sb, g);
    let sub_ids: Vec<SlpNtId> = r
        .ids()
        .iter()
        .map(|u| declare_fresh(&mut sb, format!("R{u}")))
        .collect();
    let start = declare_fresh(&mut sb, "R".to_string());
    for nt in g.nt_ids() {
        let seqs = chunk_sequences(g.rule(nt), &|b, c| ids[b.0 as usize][c]);
        for (c, seq) in seqs.into_iter().enumerate() {
            sb.set_rule(ids[nt.0 as usize][c], seq);
        }
    }
    for (slp_nt, body) in sub_ids.iter().zip(&bodies) {
        let mut seqs = chunk_sequences(body, &|b, c| ids[b.0 as usize][c]);
        debug_assert_eq!(seqs.len(), 1, "sentential bodies have rank 0");
        sb.set_rule(*slp_nt, seqs.pop().expect("one chunk"));
    }
    sb.set_rule(start, sub_ids.iter().map(|id| SlpSym::Nt(*id)).collect());
    let slp = sb.finish(start).restrict_to_reachable();
    debug_assert!(slp.validate().is_empty());
    Ok(slp)
}

/// The tighter construction for rank-0 grammars: bring the grammar into
/// node normal form, whereupon every subtree has a unique representing
/// nonterminal and the grammar doubles as a string grammar; the start rule
/// lists, per result node, its representative's bracket pair with the
/// first-child nonterminal in between. Size O(|G| + |r|).
pub fn dag_subtrees_slp(g: &SltGrammar, r: &ResultSet) -> Result<Slp> {
    if g.rank() != 0 {
        return Err(Error::NotRankZero { rank: g.rank() });
    }
    g.ensure_valid()?;
    let nnf = node_normal_form(g)?;
    let mut ctx = LocateCtx::new(&nnf)?;
    let total = ctx.totals[nnf.start().0 as usize].clone();
    let mut reps: Vec<NtId> = Vec::with_capacity(r.len());
    for u in r.ids() {
        check_range(u, &total)?;
        let mark = ctx.env_mark();
        // In node normal form the focused rule's single label is the node,
        // so the rule itself represents the subtree.
        reps.push(ctx.locate(u).expect("id is in range").rule);
        ctx.trim_envs(mark);
    }

    let mut sb = SlpBuilder::new();
    let ids: Vec<SlpNtId> = nnf
        .nt_ids()
        .map(|nt| declare_fresh(&mut sb, nnf.nt(nt).name.clone()))
        .collect();
    let start = declare_fresh(&mut sb, "R".to_string());
    // A node-normal-form body `w(x, y)` reads as the string rule
    // `<w> x </w> y` with `_` children skipped.
    let body_syms = |nt: NtId, cut_sibling: bool| -> Vec<SlpSym> {
        let body = nnf.rule(nt);
        let RhsNode::Label { label, left, right } = body.node(body.root()) else {
            return Vec::new();
        };
        let child = |id: RhsId| match body.node(id) {
            RhsNode::Nt { nt, .. } => Some(SlpSym::Nt(ids[nt.0 as usize])),
            _ => None,
        };
        let mut syms = vec![SlpSym::Tok(SlpToken::Open(label.clone()))];
        syms.extend(child(*left));
        syms.push(SlpSym::Tok(SlpToken::Close(label.clone())));
        if !cut_sibling {
            syms.extend(child(*right));
        }
        syms
    };
    for nt in nnf.nt_ids() {
        sb.set_rule(ids[nt.0 as usize], body_syms(nt, false));
    }
    let mut start_syms = Vec::new();
    for rep in &reps {
        start_syms.extend(body_syms(*rep, true));
    }
    sb.set_rule(start, start_syms);
    let slp = sb.finish(start).restrict_to_reachable();
    debug_assert!(slp.validate().is_empty());
    Ok(slp)
}
