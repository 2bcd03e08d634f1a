//! Straight-line string grammars over open/close tag tokens.
//!
//! An SLP has one rule per nonterminal, an acyclic reference relation, and
//! derives exactly one token string. Tokens are whole brackets — `<a>` or
//! `</a>` is a single terminal — matching how tree serializations are
//! produced here.

use crate::error::{Error, Result, Violation};
use crate::tree::Label;
use num_bigint::BigUint;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlpNtId(pub u32);

/// A serialization token: an opening or closing labeled bracket.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SlpToken {
    Open(Label),
    Close(Label),
}

impl SlpToken {
    /// Renders the token as markup, marked labels with `mark_token`.
    pub fn render(&self, mark_token: &str) -> String {
        match self {
            SlpToken::Open(l) => format!("<{}>", l.render(mark_token)),
            SlpToken::Close(l) => format!("</{}>", l.render(mark_token)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlpSym {
    Tok(SlpToken),
    Nt(SlpNtId),
}

/// A straight-line string grammar.
#[derive(Debug, Clone)]
pub struct Slp {
    names: Vec<String>,
    rules: Vec<Vec<SlpSym>>,
    start: SlpNtId,
    by_name: HashMap<String, SlpNtId>,
}

impl PartialEq for Slp {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.rules == other.rules && self.start == other.start
    }
}

impl Eq for Slp {}

/// Incremental construction mirroring [`crate::grammar::GrammarBuilder`].
#[derive(Debug, Default)]
pub struct SlpBuilder {
    names: Vec<String>,
    rules: Vec<Option<Vec<SlpSym>>>,
    by_name: HashMap<String, SlpNtId>,
}

impl SlpBuilder {
    pub fn new() -> SlpBuilder {
        SlpBuilder::default()
    }

    pub fn declare(&mut self, name: impl Into<String>) -> Result<SlpNtId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::SlpInvalid(vec![Violation::new(
                Some(name.clone()),
                "",
                "duplicate nonterminal name",
            )]));
        }
        let id = SlpNtId(self.names.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        self.rules.push(None);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<SlpNtId> {
        self.by_name.get(name).copied()
    }

    pub fn set_rule(&mut self, id: SlpNtId, rhs: Vec<SlpSym>) {
        self.rules[id.0 as usize] = Some(rhs);
    }

    pub fn finish(self, start: SlpNtId) -> Slp {
        let rules = self
            .rules
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.unwrap_or_else(|| panic!("nonterminal #{i} has no rule")))
            .collect();
        Slp { names: self.names, rules, start, by_name: self.by_name }
    }
}

impl Slp {
    pub fn nt_count(&self) -> usize {
        self.names.len()
    }

    pub fn start(&self) -> SlpNtId {
        self.start
    }

    pub fn name(&self, id: SlpNtId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn rule(&self, id: SlpNtId) -> &[SlpSym] {
        &self.rules[id.0 as usize]
    }

    pub fn nt_by_name(&self, name: &str) -> Option<SlpNtId> {
        self.by_name.get(name).copied()
    }

    /// Total rule-symbol count.
    pub fn size(&self) -> u64 {
        self.rules.iter().map(|r| r.len() as u64).sum()
    }

    /// Acyclicity, single-rule-per-nonterminal and reachability checks.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.topo_order().is_none() {
            violations.push(Violation::new(None, "", "reference relation is cyclic"));
        }
        let mut reachable = vec![false; self.nt_count()];
        reachable[self.start.0 as usize] = true;
        let mut queue = vec![self.start];
        while let Some(id) = queue.pop() {
            for sym in self.rule(id) {
                if let SlpSym::Nt(n) = sym {
                    if !reachable[n.0 as usize] {
                        reachable[n.0 as usize] = true;
                        queue.push(*n);
                    }
                }
            }
        }
        for (i, r) in reachable.iter().enumerate() {
            if !*r {
                violations.push(Violation::new(
                    Some(self.names[i].clone()),
                    "",
                    "not reachable from the start nonterminal",
                ));
            }
        }
        violations
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::SlpInvalid(v))
        }
    }

    /// Bottom-up order (referenced nonterminals first), `None` on cycles.
    fn topo_order(&self) -> Option<Vec<SlpNtId>> {
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; self.nt_count()];
        let mut order = Vec::with_capacity(self.nt_count());
        for root in 0..self.nt_count() as u32 {
            if color[root as usize] != WHITE {
                continue;
            }
            let mut stack: Vec<(u32, usize)> = vec![(root, 0)];
            color[root as usize] = GRAY;
            while let Some((id, i)) = stack.last_mut() {
                let refs = &self.rules[*id as usize][*i..];
                let next = refs.iter().find_map(|s| match s {
                    SlpSym::Nt(n) => Some(*n),
                    _ => None,
                });
                // Advance the cursor past the scanned prefix.
                let scanned = refs
                    .iter()
                    .position(|s| matches!(s, SlpSym::Nt(_)))
                    .map(|p| p + 1)
                    .unwrap_or(refs.len());
                *i += scanned;
                match next {
                    Some(n) => match color[n.0 as usize] {
                        WHITE => {
                            color[n.0 as usize] = GRAY;
                            stack.push((n.0, 0));
                        }
                        GRAY => return None,
                        _ => {}
                    },
                    None => {
                        let id = *id;
                        color[id as usize] = BLACK;
                        order.push(SlpNtId(id));
                        stack.pop();
                    }
                }
            }
        }
        Some(order)
    }

    /// Expansion length per nonterminal, computed without expanding.
    pub fn lengths(&self) -> Result<Vec<BigUint>> {
        let order = self.topo_order().ok_or_else(|| {
            Error::SlpInvalid(vec![Violation::new(None, "", "reference relation is cyclic")])
        })?;
        let mut lens = vec![BigUint::from(0u32); self.nt_count()];
        for id in order {
            let mut total = BigUint::from(0u32);
            for sym in self.rule(id) {
                match sym {
                    SlpSym::Tok(_) => total += 1u32,
                    SlpSym::Nt(n) => total += &lens[n.0 as usize],
                }
            }
            lens[id.0 as usize] = total;
        }
        Ok(lens)
    }

    /// Restriction to the nonterminals reachable from the start, preserving
    /// names and relative order.
    pub fn restrict_to_reachable(&self) -> Slp {
        let mut reachable = vec![false; self.nt_count()];
        reachable[self.start.0 as usize] = true;
        let mut queue = vec![self.start];
        while let Some(id) = queue.pop() {
            for sym in self.rule(id) {
                if let SlpSym::Nt(n) = sym {
                    if !reachable[n.0 as usize] {
                        reachable[n.0 as usize] = true;
                        queue.push(*n);
                    }
                }
            }
        }
        let mut sb = SlpBuilder::new();
        let mut remap: Vec<Option<SlpNtId>> = vec![None; self.nt_count()];
        for (i, r) in reachable.iter().enumerate() {
            if *r {
                remap[i] = Some(sb.declare(self.names[i].clone()).expect("names were unique"));
            }
        }
        for (i, r) in reachable.iter().enumerate() {
            if *r {
                let rhs = self.rules[i]
                    .iter()
                    .map(|sym| match sym {
                        SlpSym::Tok(t) => SlpSym::Tok(t.clone()),
                        SlpSym::Nt(n) => {
                            SlpSym::Nt(remap[n.0 as usize].expect("referenced rules are reachable"))
                        }
                    })
                    .collect();
                sb.set_rule(remap[i].expect("reachable"), rhs);
            }
        }
        sb.finish(remap[self.start.0 as usize].expect("start is reachable"))
    }

    /// Derives the token string, guarded by a token-count limit.
    pub fn expand(&self, limit: u64) -> Result<Vec<SlpToken>> {
        let lens = self.lengths()?;
        let needed = &lens[self.start.0 as usize];
        if *needed > BigUint::from(limit) {
            return Err(Error::SlpExpansionLimit { needed: needed.to_string(), limit });
        }
        let mut out = Vec::new();
        // (nonterminal, position in its rule)
        let mut stack: Vec<(SlpNtId, usize)> = vec![(self.start, 0)];
        while let Some((id, i)) = stack.last_mut() {
            match self.rules[id.0 as usize].get(*i) {
                None => {
                    stack.pop();
                }
                Some(sym) => {
                    *i += 1;
                    match sym {
                        SlpSym::Tok(t) => out.push(t.clone()),
                        SlpSym::Nt(n) => stack.push((*n, 0)),
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Renders a token string as markup text.
pub fn detokenize(tokens: &[SlpToken], mark_token: &str) -> String {
    tokens.iter().map(|t| t.render(mark_token)).collect()
}

/// Parses the `.slp` format: one `NT -> item item ...` rule per line, items
/// being nonterminal names, `<label>` or `</label>` tokens; the first rule
/// defines the start. `#` lines are comments.
pub fn parse_slp(text: &str) -> Result<Slp> {
    let mut raw: Vec<(usize, &str, &str)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((head, body)) = trimmed.split_once("->") else {
            return Err(Error::SlpParse { line: line_no, message: "expected `NT -> items`".into() });
        };
        raw.push((line_no, head.trim(), body));
    }
    if raw.is_empty() {
        return Err(Error::SlpParse { line: 1, message: "SLP file contains no rules".into() });
    }
    let mut sb = SlpBuilder::new();
    let mut heads = Vec::new();
    for (line_no, head, _) in &raw {
        if head.is_empty() || head.starts_with('<') {
            return Err(Error::SlpParse { line: *line_no, message: "missing rule head".into() });
        }
        let id = sb.declare(*head).map_err(|_| Error::SlpParse {
            line: *line_no,
            message: format!("duplicate rule for `{head}`"),
        })?;
        heads.push(id);
    }
    for ((line_no, _, body), id) in raw.iter().zip(&heads) {
        let mut rhs = Vec::new();
        for item in body.split_whitespace() {
            let sym = if let Some(rest) = item.strip_prefix("</") {
                let Some(name) = rest.strip_suffix('>') else {
                    return Err(Error::SlpParse { line: *line_no, message: format!("malformed token `{item}`") });
                };
                let label = Label::from_name(name)
                    .map_err(|e| Error::SlpParse { line: *line_no, message: e.to_string() })?;
                SlpSym::Tok(SlpToken::Close(label))
            } else if let Some(rest) = item.strip_prefix('<') {
                let Some(name) = rest.strip_suffix('>') else {
                    return Err(Error::SlpParse { line: *line_no, message: format!("malformed token `{item}`") });
                };
                let label = Label::from_name(name)
                    .map_err(|e| Error::SlpParse { line: *line_no, message: e.to_string() })?;
                SlpSym::Tok(SlpToken::Open(label))
            } else {
                match sb.lookup(item) {
                    Some(n) => SlpSym::Nt(n),
                    None => {
                        return Err(Error::SlpParse {
                            line: *line_no,
                            message: format!("unknown nonterminal `{item}`"),
                        })
                    }
                }
            };
            rhs.push(sym);
        }
        sb.set_rule(*id, rhs);
    }
    let slp = sb.finish(heads[0]);
    slp.ensure_valid()?;
    Ok(slp)
}

/// Writes the `.slp` format, start rule first. Marked labels use `^`.
pub fn write_slp(p: &Slp) -> String {
    let mut order: Vec<u32> = vec![p.start.0];
    order.extend((0..p.nt_count() as u32).filter(|i| *i != p.start.0));
    let mut out = String::new();
    for id in order {
        out.push_str(&p.names[id as usize]);
        out.push_str(" ->");
        for sym in &p.rules[id as usize] {
            out.push(' ');
            match sym {
                SlpSym::Tok(t) => out.push_str(&t.render("^")),
                SlpSym::Nt(n) => out.push_str(p.name(*n)),
            }
        }
        out.push('\n');
    }
    out
}

/// Renaming-invariant rendering in first-discovery order from the start.
pub fn canonical_form(p: &Slp) -> String {
    let mut canon: HashMap<u32, usize> = HashMap::new();
    let mut queue = vec![p.start];
    canon.insert(p.start.0, 0);
    let mut i = 0;
    while i < queue.len() {
        let id = queue[i];
        i += 1;
        for sym in p.rule(id) {
            if let SlpSym::Nt(n) = sym {
                if !canon.contains_key(&n.0) {
                    canon.insert(n.0, canon.len());
                    queue.push(*n);
                }
            }
        }
    }
    let mut lines = Vec::new();
    for &id in &queue {
        let mut line = format!("P{} ->", canon[&id.0]);
        for sym in p.rule(id) {
            line.push(' ');
            match sym {
                SlpSym::Tok(t) => line.push_str(&t.render("^")),
                SlpSym::Nt(n) => line.push_str(&format!("P{}", canon[&n.0])),
            }
        }
        lines.push(line);
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_write_roundtrip() {
        let text = "S -> A <e> </e> B\nA -> <a> <^a>\nB -> </^a> </a>\n";
        let p = parse_slp(text).unwrap();
        assert_eq!(write_slp(&p), text);
        assert_eq!(parse_slp(&write_slp(&p)).unwrap(), p);
        assert_eq!(p.size(), 8);
    }

    #[test]
    fn expand_and_lengths_agree() {
        let p = parse_slp("S -> A A <e> </e>\nA -> <a> </a>").unwrap();
        let lens = p.lengths().unwrap();
        let toks = p.expand(100).unwrap();
        assert_eq!(BigUint::from(toks.len()), lens[p.start().0 as usize]);
        assert_eq!(detokenize(&toks, "^"), "<a></a><a></a><e></e>");
    }

    #[test]
    fn doubling_chain_length_without_expansion() {
        // A doubling chain: len(A_i) = 2^(i-1), so the start derives 2^100
        // tokens, computed without expanding.
        let n = 100u32;
        let mut text = String::from("S -> A100 A100\n");
        for i in (2..=n).rev() {
            text.push_str(&format!("A{i} -> A{} A{}\n", i - 1, i - 1));
        }
        text.push_str("A1 -> <a>\n");
        let p = parse_slp(&text).unwrap();
        let lens = p.lengths().unwrap();
        assert_eq!(lens[p.start().0 as usize], BigUint::from(1u32) << 100);
        assert!(matches!(p.expand(1 << 20), Err(Error::SlpExpansionLimit { .. })));
    }

    #[test]
    fn validate_rejects_cycles_and_orphans() {
        let mut sb = SlpBuilder::new();
        let s = sb.declare("S").unwrap();
        sb.set_rule(s, vec![SlpSym::Nt(s)]);
        let p = sb.finish(s);
        assert!(p.validate().iter().any(|v| v.message.contains("cyclic")));

        let mut sb = SlpBuilder::new();
        let s = sb.declare("S").unwrap();
        let orphan = sb.declare("X").unwrap();
        sb.set_rule(s, vec![]);
        sb.set_rule(orphan, vec![]);
        let p = sb.finish(s);
        assert!(p.validate().iter().any(|v| v.message.contains("not reachable")));
    }

    #[test]
    fn empty_rules_are_fine() {
        let p = parse_slp("S -> A <a> A\nA ->").unwrap();
        assert_eq!(detokenize(&p.expand(10).unwrap(), "^"), "<a>");
    }

    #[test]
    fn canonical_form_ignores_names() {
        let a = parse_slp("S -> A B\nA -> <a>\nB -> </a>").unwrap();
        let b = parse_slp("root -> x y\nx -> <a>\ny -> </a>").unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
    }
}
