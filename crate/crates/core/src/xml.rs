//! Element-only XML parsing and serialization.
//!
//! The parser keeps exactly what the tree model needs: element structure and
//! order. Text, attributes, comments, processing instructions, CDATA and
//! DOCTYPE are skipped by default; in strict mode their presence is an
//! error. Serialization always writes paired tags (`<a></a>`, never `<a/>`)
//! so the output tokenizes one-to-one into opening/closing brackets.

use crate::error::{Error, Result};
use crate::tree::{BNodeId, BinTree, Label, UNodeId, UnrankedNode, UnrankedTree};
use std::io::Write;

struct Scanner<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn err(&self, at: usize, message: impl Into<String>) -> Error {
        let consumed = &self.text[..at.min(self.text.len())];
        let line = consumed.bytes().filter(|&b| b == b'\n').count() + 1;
        let column = consumed.len() - consumed.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
        Error::XmlParse { line, column, message: message.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.text[self.pos..].starts_with(s)
    }

    /// Advances past `until` and returns, or errors at the start position.
    fn skip_until(&mut self, until: &str, what: &str) -> Result<()> {
        match self.text[self.pos..].find(until) {
            Some(i) => {
                self.pos += i + until.len();
                Ok(())
            }
            None => Err(self.err(self.pos, format!("unterminated {what}"))),
        }
    }
}

/// Parses a well-formed XML document into its element tree.
///
/// With `strict` set, any non-element content (non-whitespace text,
/// attributes, comments, processing instructions, CDATA, DOCTYPE) is
/// rejected instead of skipped.
pub fn parse_xml(text: &str, strict: bool) -> Result<UnrankedTree> {
    let mut sc = Scanner { text, bytes: text.as_bytes(), pos: 0 };
    // Open-element stack: (label, children built so far, tag position).
    let mut stack: Vec<(Label, Vec<UNodeId>, usize)> = Vec::new();
    let mut arena: Vec<UnrankedNode> = Vec::new();
    let mut root: Option<UNodeId> = None;

    let finish_node = |arena: &mut Vec<UnrankedNode>, label: Label, children: Vec<UNodeId>| {
        arena.push(UnrankedNode { label, children });
        UNodeId(arena.len() as u32 - 1)
    };

    while sc.pos < sc.bytes.len() {
        let at = sc.pos;
        match sc.peek().unwrap() {
            b'<' => {
                if sc.starts_with("<!--") {
                    if strict {
                        return Err(sc.err(at, "comment not allowed in strict mode"));
                    }
                    sc.skip_until("-->", "comment")?;
                } else if sc.starts_with("<![CDATA[") {
                    if strict {
                        return Err(sc.err(at, "CDATA not allowed in strict mode"));
                    }
                    sc.skip_until("]]>", "CDATA section")?;
                } else if sc.starts_with("<!") {
                    if strict {
                        return Err(sc.err(at, "declaration not allowed in strict mode"));
                    }
                    sc.skip_until(">", "declaration")?;
                } else if sc.starts_with("<?") {
                    if strict {
                        return Err(sc.err(at, "processing instruction not allowed in strict mode"));
                    }
                    sc.skip_until("?>", "processing instruction")?;
                } else if sc.starts_with("</") {
                    sc.pos += 2;
                    let name_start = sc.pos;
                    while sc.peek().is_some_and(|b| b != b'>' && !b.is_ascii_whitespace()) {
                        sc.pos += 1;
                    }
                    let name = &sc.text[name_start..sc.pos];
                    while sc.peek().is_some_and(|b| b.is_ascii_whitespace()) {
                        sc.pos += 1;
                    }
                    if sc.peek() != Some(b'>') {
                        return Err(sc.err(sc.pos, "expected '>' to end closing tag"));
                    }
                    sc.pos += 1;
                    let label =
                        Label::from_name(name).map_err(|e| sc.err(name_start, e.to_string()))?;
                    let Some((open_label, children, _)) = stack.pop() else {
                        return Err(sc.err(at, format!("closing tag </{name}> without open element")));
                    };
                    if open_label != label {
                        return Err(sc.err(
                            at,
                            format!("closing tag </{name}> does not match <{open_label}>"),
                        ));
                    }
                    let id = finish_node(&mut arena, open_label, children);
                    match stack.last_mut() {
                        Some(parent) => parent.1.push(id),
                        None => {
                            if root.is_some() {
                                return Err(sc.err(at, "multiple root elements"));
                            }
                            root = Some(id);
                        }
                    }
                } else {
                    // Opening tag.
                    if root.is_some() && stack.is_empty() {
                        return Err(sc.err(at, "content after the root element"));
                    }
                    sc.pos += 1;
                    let name_start = sc.pos;
                    while sc
                        .peek()
                        .is_some_and(|b| b != b'>' && b != b'/' && !b.is_ascii_whitespace())
                    {
                        sc.pos += 1;
                    }
                    let name = &sc.text[name_start..sc.pos];
                    if name.is_empty() {
                        return Err(sc.err(at, "empty tag name"));
                    }
                    let label =
                        Label::from_name(name).map_err(|e| sc.err(name_start, e.to_string()))?;
                    // Attributes are skipped; quoted values may contain '>'.
                    let mut self_closing = false;
                    let mut saw_attr = false;
                    loop {
                        match sc.peek() {
                            None => return Err(sc.err(at, "unterminated tag")),
                            Some(b'>') => {
                                sc.pos += 1;
                                break;
                            }
                            Some(b'/') if sc.starts_with("/>") => {
                                sc.pos += 2;
                                self_closing = true;
                                break;
                            }
                            Some(b'"') | Some(b'\'') => {
                                let quote = sc.peek().unwrap();
                                sc.pos += 1;
                                while sc.peek().is_some_and(|b| b != quote) {
                                    sc.pos += 1;
                                }
                                if sc.peek().is_none() {
                                    return Err(sc.err(at, "unterminated attribute value"));
                                }
                                sc.pos += 1;
                            }
                            Some(b) => {
                                if !b.is_ascii_whitespace() {
                                    saw_attr = true;
                                }
                                sc.pos += 1;
                            }
                        }
                    }
                    if strict && saw_attr {
                        return Err(sc.err(at, "attributes not allowed in strict mode"));
                    }
                    if self_closing {
                        let id = finish_node(&mut arena, label, Vec::new());
                        match stack.last_mut() {
                            Some(parent) => parent.1.push(id),
                            None => {
                                if root.is_some() {
                                    return Err(sc.err(at, "multiple root elements"));
                                }
                                root = Some(id);
                            }
                        }
                    } else {
                        stack.push((label, Vec::new(), at));
                    }
                }
            }
            _ => {
                // Text content.
                let start = sc.pos;
                while sc.peek().is_some_and(|b| b != b'<') {
                    sc.pos += 1;
                }
                let chunk = &sc.text[start..sc.pos];
                if !chunk.trim().is_empty() {
                    if strict {
                        return Err(sc.err(start, "text content not allowed in strict mode"));
                    }
                    if stack.is_empty() {
                        return Err(sc.err(start, "text outside the root element"));
                    }
                }
            }
        }
    }

    if let Some((label, _, at)) = stack.last() {
        return Err(sc.err(*at, format!("element <{label}> is never closed")));
    }
    match root {
        Some(r) => Ok(UnrankedTree::from_arena(arena, r)),
        None => Err(sc.err(0, "document has no root element")),
    }
}

/// Writes the XML serialization of the unranked subtree at `node`: the node
/// itself plus its first-child subtree in the binary encoding; the
/// next-sibling subtree of `node` is excluded. Marked labels render with
/// `mark_token`.
pub fn write_subtree<W: Write>(
    tree: &BinTree,
    node: BNodeId,
    mark_token: &str,
    out: &mut W,
) -> Result<()> {
    enum Item {
        Visit(Option<BNodeId>),
        Close(BNodeId),
    }
    // The stream of a binary node x is <w> stream(left) </w> stream(right);
    // the result root's next-sibling part is cut off.
    let first = tree.node(node);
    write!(out, "<{}>", first.label.render(mark_token))?;
    let mut stack = vec![Item::Close(node), Item::Visit(first.left)];
    while let Some(item) = stack.pop() {
        match item {
            Item::Visit(None) => {}
            Item::Visit(Some(id)) => {
                let n = tree.node(id);
                write!(out, "<{}>", n.label.render(mark_token))?;
                stack.push(Item::Visit(n.right));
                stack.push(Item::Close(id));
                stack.push(Item::Visit(n.left));
            }
            Item::Close(id) => {
                write!(out, "</{}>", tree.node(id).label.render(mark_token))?;
            }
        }
    }
    Ok(())
}

/// Convenience wrapper returning the serialization as a `String`.
pub fn subtree_to_string(tree: &BinTree, node: BNodeId, mark_token: &str) -> String {
    let mut buf = Vec::new();
    write_subtree(tree, node, mark_token, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serialized XML is valid UTF-8")
}

/// Serializes a whole document tree. Errors if the tree has no labeled root.
pub fn write_document<W: Write>(tree: &BinTree, mark_token: &str, out: &mut W) -> Result<()> {
    match tree.root() {
        Some(r) => write_subtree(tree, r, mark_token, out),
        None => Err(Error::RootHasSibling),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fcns_encode;

    #[test]
    fn parses_library_document() {
        let t = parse_xml(
            "<library><book><title/><author/></book><book><title/><author/></book></library>",
            false,
        )
        .unwrap();
        assert_eq!(t.node_count(), 7);
        let labels: Vec<&str> = t
            .preorder_nodes()
            .iter()
            .map(|id| t.node(*id).label.text())
            .collect();
        assert_eq!(labels, ["library", "book", "title", "author", "book", "title", "author"]);
    }

    #[test]
    fn parses_smallest_document() {
        let t = parse_xml("<a/>", false).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.node(t.root()).label.text(), "a");
    }

    #[test]
    fn skips_text_and_noise() {
        let t = parse_xml(
            "<?xml version=\"1.0\"?><!-- doc --><a>text<b attr=\"v>\"/>more<![CDATA[<x>]]></a>",
            false,
        )
        .unwrap();
        assert_eq!(t.node_count(), 2);
        let root = t.node(t.root());
        assert_eq!(root.label.text(), "a");
        assert_eq!(root.children.len(), 1);
        assert_eq!(t.node(root.children[0]).label.text(), "b");
    }

    #[test]
    fn strict_mode_rejects_noise() {
        assert!(parse_xml("<a>text</a>", true).is_err());
        assert!(parse_xml("<a x=\"1\"/>", true).is_err());
        assert!(parse_xml("<a><!-- c --></a>", true).is_err());
        assert!(parse_xml("<a><b/></a>", true).is_ok());
    }

    #[test]
    fn reports_errors_with_position() {
        let err = parse_xml("<a>\n<b></c></a>", false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(parse_xml("", false).is_err());
        assert!(parse_xml("<a><a/>", false).is_err());
        assert!(parse_xml("<a/><b/>", false).is_err());
    }

    #[test]
    fn serializes_paired_tags() {
        let t = parse_xml("<a><b/></a>", false).unwrap();
        let b = fcns_encode(&t);
        assert_eq!(subtree_to_string(&b, b.root().unwrap(), "^"), "<a><b></b></a>");
    }

    #[test]
    fn serialize_subtree_cuts_siblings() {
        let t = parse_xml(
            "<library><book><title/><author/></book><book><title/><author/></book></library>",
            false,
        )
        .unwrap();
        let b = fcns_encode(&t);
        let nodes = b.preorder_nodes();
        // Pre-order position 2 is the first book; position 3 a title.
        assert_eq!(
            subtree_to_string(&b, nodes[1], "^"),
            "<book><title></title><author></author></book>"
        );
        assert_eq!(subtree_to_string(&b, nodes[2], "^"), "<title></title>");
    }

    #[test]
    fn roundtrip_through_serialization() {
        let src = "<r><x><y/><y/></x><z/><x><y/><y/></x></r>";
        let b = fcns_encode(&parse_xml(src, false).unwrap());
        let text = subtree_to_string(&b, b.root().unwrap(), "^");
        let again = fcns_encode(&parse_xml(&text, false).unwrap());
        assert_eq!(b, again);
    }

    #[test]
    fn marked_labels_roundtrip() {
        let t = parse_xml("<a><^a/></a>", false).unwrap();
        let root = t.node(t.root());
        assert!(!root.label.is_marked());
        assert!(t.node(root.children[0]).label.is_marked());
        let b = fcns_encode(&t);
        assert_eq!(subtree_to_string(&b, b.root().unwrap(), "^"), "<a><^a></^a></a>");
    }
}
