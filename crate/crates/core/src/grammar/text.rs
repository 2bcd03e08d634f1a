//! The `.slt` grammar file format.
//!
//! One rule per line, `NT(y1,...,yk) -> term`, where a term is a label with
//! exactly two children, `_`, a parameter `y<i>`, or a nonterminal with
//! rank-many children (parentheses omitted at rank 0). The first rule
//! defines the start nonterminal. Marked labels carry a `^` prefix. Lines
//! whose first non-blank character is `#` are comments.

use super::{GrammarBuilder, NtId, RhsId, RhsNode, RhsTree, SltGrammar};
use crate::error::{Error, Result};
use crate::tree::Label;

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::GrammarParse { line, column, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Open,
    Close,
    Comma,
}

/// Tokenizes one rule right-hand side; columns are 1-based byte offsets.
fn tokenize(line_no: usize, text: &str, start_col: usize) -> Result<Vec<(Tok, usize)>> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let col = start_col + i;
        match bytes[i] {
            b'(' => {
                toks.push((Tok::Open, col));
                i += 1;
            }
            b')' => {
                toks.push((Tok::Close, col));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, col));
                i += 1;
            }
            b if b.is_ascii_whitespace() => i += 1,
            _ => {
                let s = i;
                while i < bytes.len()
                    && !matches!(bytes[i], b'(' | b')' | b',')
                    && !bytes[i].is_ascii_whitespace()
                {
                    i += 1;
                }
                toks.push((Tok::Atom(text[s..i].to_string()), col));
            }
        }
    }
    let _ = line_no;
    Ok(toks)
}

/// An atom `y<digits>` is a parameter when the index is within the rule's
/// rank; out-of-range indices fall through to label/nonterminal handling so
/// that documents with elements literally named `y1` stay representable.
fn param_index(atom: &str, rank: u32) -> Option<u32> {
    let digits = atom.strip_prefix('y')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let idx: u64 = digits.parse().ok()?;
    if idx >= 1 && idx <= rank as u64 {
        Some(idx as u32 - 1)
    } else {
        None
    }
}

fn finish_atom(
    gb: &GrammarBuilder,
    rank: u32,
    out: &mut RhsTree,
    line: usize,
    atom: &str,
    col: usize,
    children: Vec<RhsId>,
) -> Result<RhsId> {
    if atom == "_" {
        if !children.is_empty() {
            return Err(perr(line, col, "the `_` leaf takes no children"));
        }
        return Ok(out.push(RhsNode::Underscore));
    }
    if let Some(i) = param_index(atom, rank) {
        if !children.is_empty() {
            return Err(perr(line, col, format!("parameter {atom} takes no children")));
        }
        return Ok(out.push(RhsNode::Param(i)));
    }
    if let Some(nt) = gb.lookup(atom) {
        return Ok(out.push(RhsNode::Nt { nt, children }));
    }
    // A label: exactly two children.
    if children.len() != 2 {
        return Err(perr(
            line,
            col,
            format!(
                "`{atom}` is not a nonterminal, so it must be a label with exactly two children (found {})",
                children.len()
            ),
        ));
    }
    let label = Label::from_name(atom).map_err(|e| perr(line, col, e.to_string()))?;
    Ok(out.push(RhsNode::Label { label, left: children[0], right: children[1] }))
}

fn parse_term(
    gb: &GrammarBuilder,
    rank: u32,
    line: usize,
    toks: &[(Tok, usize)],
) -> Result<RhsTree> {
    let mut out = RhsTree::new();
    // Frames of partially parsed `atom(child, child, ...` applications.
    let mut frames: Vec<(String, usize, Vec<RhsId>)> = Vec::new();
    let mut last: Option<RhsId> = None;
    let mut expecting_term = true;
    let mut i = 0;
    while i < toks.len() {
        let (tok, col) = &toks[i];
        if expecting_term {
            let Tok::Atom(atom) = tok else {
                return Err(perr(line, *col, "expected a label, nonterminal, parameter or `_`"));
            };
            if matches!(toks.get(i + 1), Some((Tok::Open, _))) {
                frames.push((atom.clone(), *col, Vec::new()));
                i += 2;
                continue;
            }
            last = Some(finish_atom(gb, rank, &mut out, line, atom, *col, Vec::new())?);
            expecting_term = false;
        } else {
            match tok {
                Tok::Comma => {
                    let Some(frame) = frames.last_mut() else {
                        return Err(perr(line, *col, "`,` outside parentheses"));
                    };
                    frame.2.push(last.take().expect("a term was just parsed"));
                    expecting_term = true;
                }
                Tok::Close => {
                    let Some((atom, acol, mut children)) = frames.pop() else {
                        return Err(perr(line, *col, "unmatched `)`"));
                    };
                    children.push(last.take().expect("a term was just parsed"));
                    last = Some(finish_atom(gb, rank, &mut out, line, &atom, acol, children)?);
                }
                Tok::Atom(_) | Tok::Open => {
                    return Err(perr(line, *col, "expected `,` or `)`"));
                }
            }
        }
        i += 1;
    }
    if expecting_term {
        return Err(perr(line, toks.last().map(|t| t.1).unwrap_or(1), "incomplete term"));
    }
    if let Some((_, col, _)) = frames.last() {
        return Err(perr(line, *col, "unclosed `(`"));
    }
    out.set_root(last.expect("non-empty term"));
    Ok(out)
}

/// Parses the rule head `NT` or `NT(y1,...,yk)`, returning name and rank.
fn parse_head(line: usize, head: &str) -> Result<(String, u32)> {
    let head = head.trim();
    if head.is_empty() {
        return Err(perr(line, 1, "missing rule head"));
    }
    match head.find('(') {
        None => Ok((head.to_string(), 0)),
        Some(p) => {
            let name = head[..p].trim();
            let rest = head[p + 1..].trim_end();
            let Some(inner) = rest.strip_suffix(')') else {
                return Err(perr(line, p + 1, "unclosed parameter list"));
            };
            let params: Vec<&str> = inner.split(',').map(str::trim).collect();
            for (i, pname) in params.iter().enumerate() {
                let expected = format!("y{}", i + 1);
                if *pname != expected {
                    return Err(perr(
                        line,
                        p + 1,
                        format!("parameter list must be y1,...,yk in order; found `{pname}`, expected `{expected}`"),
                    ));
                }
            }
            Ok((name.to_string(), params.len() as u32))
        }
    }
}

/// Parses a grammar file without checking the straight-line invariants.
pub fn parse_grammar_unchecked(text: &str) -> Result<SltGrammar> {
    // (line number, head, body text, body column)
    let mut raw: Vec<(usize, String, String, usize)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(arrow) = line.find("->") else {
            return Err(perr(line_no, 1, "expected `head -> body`"));
        };
        raw.push((
            line_no,
            line[..arrow].to_string(),
            line[arrow + 2..].to_string(),
            arrow + 3,
        ));
    }
    if raw.is_empty() {
        return Err(perr(1, 1, "grammar file contains no rules"));
    }

    let mut gb = GrammarBuilder::new();
    let mut heads: Vec<(NtId, u32)> = Vec::new();
    for (line_no, head, _, _) in &raw {
        let (name, rank) = parse_head(*line_no, head)?;
        let id = gb
            .declare(name.clone(), rank)
            .map_err(|_| perr(*line_no, 1, format!("duplicate rule for `{name}`")))?;
        heads.push((id, rank));
    }
    for ((line_no, _, body, body_col), (id, rank)) in raw.iter().zip(&heads) {
        let toks = tokenize(*line_no, body, *body_col)?;
        if toks.is_empty() {
            return Err(perr(*line_no, *body_col, "empty rule body"));
        }
        gb.set_rule(*id, parse_term(&gb, *rank, *line_no, &toks)?);
    }
    Ok(gb.finish(heads[0].0))
}

/// Parses a grammar file; the first rule defines the start nonterminal.
/// Validation violations are surfaced as errors.
pub fn parse_grammar(text: &str) -> Result<SltGrammar> {
    let g = parse_grammar_unchecked(text)?;
    g.ensure_valid()?;
    Ok(g)
}

/// Renders a rule body in the file syntax.
pub(super) fn render_term(
    body: &RhsTree,
    name_of: impl Fn(NtId) -> String,
) -> String {
    enum Item {
        Node(RhsId),
        Text(&'static str),
    }
    let mut out = String::new();
    let mut stack = vec![Item::Node(body.root())];
    while let Some(item) = stack.pop() {
        match item {
            Item::Text(s) => out.push_str(s),
            Item::Node(id) => match body.node(id) {
                RhsNode::Underscore => out.push('_'),
                RhsNode::Param(i) => {
                    out.push('y');
                    out.push_str(&(i + 1).to_string());
                }
                RhsNode::Label { label, left, right } => {
                    out.push_str(&label.to_string());
                    out.push('(');
                    stack.push(Item::Text(")"));
                    stack.push(Item::Node(*right));
                    stack.push(Item::Text(","));
                    stack.push(Item::Node(*left));
                }
                RhsNode::Nt { nt, children } => {
                    out.push_str(&name_of(*nt));
                    if !children.is_empty() {
                        out.push('(');
                        stack.push(Item::Text(")"));
                        for (i, c) in children.iter().enumerate().rev() {
                            if i + 1 < children.len() {
                                stack.push(Item::Text(","));
                            }
                            stack.push(Item::Node(*c));
                        }
                    }
                }
            },
        }
    }
    out
}

/// Writes a grammar in the file syntax, start rule first.
pub fn write_grammar(g: &SltGrammar) -> String {
    let mut order: Vec<NtId> = vec![g.start()];
    order.extend(g.nt_ids().filter(|id| *id != g.start()));
    let mut out = String::new();
    for id in order {
        let nt = g.nt(id);
        out.push_str(&nt.name);
        if nt.rank > 0 {
            let params: Vec<String> = (1..=nt.rank).map(|i| format!("y{i}")).collect();
            out.push('(');
            out.push_str(&params.join(","));
            out.push(')');
        }
        out.push_str(" -> ");
        out.push_str(&render_term(g.rule(id), |b| g.nt(b).name.clone()));
        out.push('\n');
    }
    out
}
