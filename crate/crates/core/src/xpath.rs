//! XPath fragment parsing and compilation into selecting tree automata.
//!
//! The fragment is `/axis::test/...` with the child, descendant and
//! following-sibling axes, name tests and `*`. Queries are anchored at a
//! virtual super-root, so `/a` tests the document root's own label.
//!
//! Child/descendant-only step sequences compile to a deterministic string
//! automaton over root-to-node label paths ([`segment_to_dfa`]): a position
//! NFA (descendant steps self-loop, wildcards advance on every label) is
//! determinized by subset construction, minimized, and represented with
//! per-state exception maps plus a `%` default, since the label alphabet is
//! infinite.
//!
//! [`query_to_dst`] compiles the full fragment. Queries without
//! following-sibling lift the minimized DFA by `(s,a) -> (s',s)`: the left
//! child advances, the right child (the next sibling) re-reads the same
//! state, and entering a final state selects. Queries with
//! following-sibling are compiled by determinizing a position NFA over
//! direction-decorated binary paths: between two matched steps the binary
//! path must be `L·R*` for child, `L·(L|R)*` for descendant and `R·R*` for
//! following-sibling. The decorated construction keeps a child/descendant
//! run alive alongside an in-progress sibling scan, which a per-segment
//! merge would lose.

use crate::automaton::{DstAutomaton, DstRule, RuleRhs, StateId};
use crate::error::{Error, Result};
use crate::tree::Label;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Child,
    Descendant,
    FollowingSibling,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeTest {
    Wildcard,
    Name(String),
}

impl NodeTest {
    fn matches(&self, label: Option<&str>) -> bool {
        match self {
            NodeTest::Wildcard => true,
            NodeTest::Name(n) => label == Some(n.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub axis: Axis,
    pub test: NodeTest,
}

/// A parsed query; the first step's axis is never following-sibling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XPathQuery {
    pub steps: Vec<Step>,
}

impl fmt::Display for XPathQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            let axis = match step.axis {
                Axis::Child => "",
                Axis::Descendant => "descendant::",
                Axis::FollowingSibling => "following-sibling::",
            };
            let test = match &step.test {
                NodeTest::Wildcard => "*",
                NodeTest::Name(n) => n.as_str(),
            };
            write!(f, "/{axis}{test}")?;
        }
        Ok(())
    }
}

fn unsupported(construct: &str, message: &str) -> Error {
    Error::XPathUnsupported { construct: construct.to_string(), message: message.to_string() }
}

/// Parses the surface syntax: `/` is the child axis, `//` descends, and
/// explicit `child::`, `descendant::`, `following-sibling::` prefixes are
/// accepted. Anything outside the fragment is an unsupported-feature error
/// naming the construct.
pub fn parse_xpath(text: &str) -> Result<XPathQuery> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::XPathParse { message: "empty query".into() });
    }
    if !text.starts_with('/') {
        return Err(Error::XPathParse {
            message: "only absolute queries are supported; start with / or //".into(),
        });
    }
    let mut steps = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let descendant_shorthand = rest.starts_with("//");
        rest = rest.trim_start_matches('/');
        if rest.is_empty() || rest.starts_with('/') {
            return Err(Error::XPathParse { message: "empty step".into() });
        }
        let end = rest.find('/').unwrap_or(rest.len());
        let step_text = &rest[..end];
        rest = &rest[end..];

        if let Some(p) = step_text.find('[') {
            return Err(unsupported(&step_text[p..], "filters are not supported"));
        }
        if step_text.contains('(') {
            return Err(unsupported(step_text, "function calls are not supported"));
        }
        if step_text.contains('@') {
            return Err(unsupported(step_text, "attribute tests are not supported"));
        }

        let (axis, test_text) = match step_text.split_once("::") {
            Some((axis_name, t)) => {
                if descendant_shorthand {
                    return Err(Error::XPathParse {
                        message: format!("`//` already selects an axis; unexpected `{axis_name}::`"),
                    });
                }
                let axis = match axis_name {
                    "child" => Axis::Child,
                    "descendant" => Axis::Descendant,
                    "following-sibling" => Axis::FollowingSibling,
                    other => return Err(unsupported(other, "axis is not supported")),
                };
                (axis, t)
            }
            None => {
                (if descendant_shorthand { Axis::Descendant } else { Axis::Child }, step_text)
            }
        };

        let test = if test_text == "*" {
            NodeTest::Wildcard
        } else {
            let label = Label::new(test_text)
                .map_err(|e| Error::XPathParse { message: e.to_string() })?;
            NodeTest::Name(label.text().to_string())
        };
        if steps.is_empty() && axis == Axis::FollowingSibling {
            return Err(Error::XPathParse {
                message: "a query cannot begin with following-sibling".into(),
            });
        }
        steps.push(Step { axis, test });
    }
    Ok(XPathQuery { steps })
}

/// A total deterministic automaton over label paths, with per-state
/// exception transitions plus a `%` default. State 0 is initial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDfa {
    states: Vec<DfaState>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfaState {
    pub exceptions: BTreeMap<String, usize>,
    pub default: usize,
    pub is_final: bool,
}

impl PathDfa {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &DfaState {
        &self.states[i]
    }

    pub fn step(&self, state: usize, label: &str) -> usize {
        let s = &self.states[state];
        s.exceptions.get(label).copied().unwrap_or(s.default)
    }

    /// Whether the node at the end of this root-to-node label path matches.
    pub fn accepts<S: AsRef<str>>(&self, path: &[S]) -> bool {
        let mut q = 0;
        for l in path {
            q = self.step(q, l.as_ref());
        }
        self.states[q].is_final
    }

    /// Renaming-invariant rendering; equality means isomorphism.
    pub fn canonical_form(&self) -> String {
        let mut lines = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            let fin = if s.is_final { " final" } else { "" };
            for (w, t) in &s.exceptions {
                lines.push(format!("{i},{w} -> {t}{fin}"));
            }
            lines.push(format!("{i},% -> {}{fin}", s.default));
        }
        lines.join("\n")
    }
}

/// Labels named by the query; everything else behaves as the `%` default.
fn mentioned_labels(steps: &[Step]) -> BTreeSet<String> {
    steps
        .iter()
        .filter_map(|s| match &s.test {
            NodeTest::Name(n) => Some(n.clone()),
            NodeTest::Wildcard => None,
        })
        .collect()
}

/// Interns subsets during determinization, enforcing the state cap.
struct SubsetInterner {
    index: HashMap<Vec<u16>, usize>,
    sets: Vec<Vec<u16>>,
    cap: usize,
}

impl SubsetInterner {
    fn new(cap: usize) -> SubsetInterner {
        SubsetInterner { index: HashMap::new(), sets: Vec::new(), cap }
    }

    fn intern(&mut self, set: Vec<u16>) -> Result<usize> {
        if let Some(i) = self.index.get(&set) {
            return Ok(*i);
        }
        if self.sets.len() >= self.cap {
            return Err(Error::DfaStateCap { cap: self.cap });
        }
        let i = self.sets.len();
        self.index.insert(set.clone(), i);
        self.sets.push(set);
        Ok(i)
    }
}

/// Builds the minimized path DFA for a child/descendant-only step sequence.
///
/// Positions 0..=n of the NFA count matched steps; a descendant step
/// self-loops on every label at its source position, a wildcard advances on
/// every label. Subsets containing position n are final. Wildcards can blow
/// the subset count up exponentially, hence the explicit cap.
pub fn segment_to_dfa(steps: &[Step], cap: usize) -> Result<PathDfa> {
    if let Some(s) = steps.iter().find(|s| s.axis == Axis::FollowingSibling) {
        return Err(unsupported(
            &s.to_owned().test_name(),
            "segment_to_dfa handles child/descendant steps only",
        ));
    }
    let n = steps.len();
    let mentioned = mentioned_labels(steps);
    // δ over one symbol: stay on descendant loops, advance on test matches.
    let delta = |set: &[u16], label: Option<&str>| -> Vec<u16> {
        let mut out = BTreeSet::new();
        for &p in set {
            let p = p as usize;
            if p < n {
                if steps[p].axis == Axis::Descendant {
                    out.insert(p as u16);
                }
                if steps[p].test.matches(label) {
                    out.insert(p as u16 + 1);
                }
            }
        }
        out.into_iter().collect()
    };

    let mut interner = SubsetInterner::new(cap);
    interner.intern(vec![0])?;
    let mut raw: Vec<(BTreeMap<String, usize>, usize)> = Vec::new();
    let mut i = 0;
    while i < interner.sets.len() {
        let set = interner.sets[i].clone();
        let default = interner.intern(delta(&set, None))?;
        let mut exceptions = BTreeMap::new();
        for w in &mentioned {
            let t = interner.intern(delta(&set, Some(w)))?;
            if t != default {
                exceptions.insert(w.clone(), t);
            }
        }
        raw.push((exceptions, default));
        i += 1;
    }
    let finals: Vec<bool> =
        interner.sets.iter().map(|s| s.contains(&(n as u16))).collect();

    Ok(minimize_dfa(&raw, &finals, &mentioned))
}

/// Moore minimization over the finite alphabet `mentioned ∪ {%}`, followed by
/// canonical renumbering (breadth-first from the initial state, label-sorted
/// exceptions before the default).
fn minimize_dfa(
    raw: &[(BTreeMap<String, usize>, usize)],
    finals: &[bool],
    mentioned: &BTreeSet<String>,
) -> PathDfa {
    let n = raw.len();
    let step = |s: usize, w: &str| raw[s].0.get(w).copied().unwrap_or(raw[s].1);
    let mut class: Vec<usize> = finals.iter().map(|f| usize::from(*f)).collect();
    loop {
        let mut sig_ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut next = vec![0usize; n];
        for s in 0..n {
            let mut sig = vec![class[s], class[raw[s].1]];
            sig.extend(mentioned.iter().map(|w| class[step(s, w)]));
            let id = sig_ids.len();
            next[s] = *sig_ids.entry(sig).or_insert(id);
        }
        let stable = {
            let count: BTreeSet<usize> = class.iter().copied().collect();
            sig_ids.len() == count.len()
        };
        class = next;
        if stable {
            break;
        }
    }
    // Representative per class, then canonical BFS numbering from state 0.
    let mut rep: HashMap<usize, usize> = HashMap::new();
    for s in 0..n {
        rep.entry(class[s]).or_insert(s);
    }
    let mut order: Vec<usize> = vec![class[0]];
    let mut seen: BTreeSet<usize> = order.iter().copied().collect();
    let mut i = 0;
    while i < order.len() {
        let c = order[i];
        i += 1;
        let s = rep[&c];
        let mut successors: Vec<usize> = Vec::new();
        for w in mentioned {
            successors.push(class[step(s, w)]);
        }
        successors.push(class[raw[s].1]);
        for t in successors {
            if seen.insert(t) {
                order.push(t);
            }
        }
    }
    let renumber: HashMap<usize, usize> =
        order.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut states = Vec::with_capacity(order.len());
    for c in &order {
        let s = rep[c];
        let default = renumber[&class[raw[s].1]];
        let mut exceptions = BTreeMap::new();
        for w in mentioned {
            let t = renumber[&class[step(s, w)]];
            if t != default {
                exceptions.insert(w.clone(), t);
            }
        }
        states.push(DfaState { exceptions, default, is_final: finals[s] });
    }
    PathDfa { states }
}

impl Step {
    fn test_name(&self) -> String {
        match &self.test {
            NodeTest::Wildcard => "*".into(),
            NodeTest::Name(n) => n.clone(),
        }
    }
}

/// One raw automaton state during construction: exception rules per label
/// plus the default, as (left, right, selecting) triples.
type RawRhs = (usize, usize, bool);
struct RawDst {
    states: Vec<(BTreeMap<String, RawRhs>, RawRhs)>,
    initial: usize,
}

/// Assigns canonical `q0..qk` names in breadth-first discovery order and
/// assembles the validated automaton.
fn finalize_dst(raw: RawDst) -> DstAutomaton {
    let mut order: Vec<usize> = vec![raw.initial];
    let mut seen: BTreeSet<usize> = order.iter().copied().collect();
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        i += 1;
        let (exceptions, default) = &raw.states[s];
        let mut successors: Vec<usize> = Vec::new();
        for rhs in exceptions.values() {
            successors.push(rhs.0);
            successors.push(rhs.1);
        }
        successors.push(default.0);
        successors.push(default.1);
        for t in successors {
            if seen.insert(t) {
                order.push(t);
            }
        }
    }
    let renumber: HashMap<usize, usize> =
        order.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let names: Vec<String> = (0..order.len()).map(|i| format!("q{i}")).collect();
    let mut rules = Vec::new();
    for (new_id, old_id) in order.iter().enumerate() {
        let (exceptions, default) = &raw.states[*old_id];
        let to_rhs = |r: &RawRhs| RuleRhs {
            left: StateId(renumber[&r.0] as u32),
            right: StateId(renumber[&r.1] as u32),
            selecting: r.2,
        };
        for (w, rhs) in exceptions {
            rules.push(DstRule {
                state: StateId(new_id as u32),
                guard: Some(w.clone()),
                rhs: to_rhs(rhs),
            });
        }
        rules.push(DstRule { state: StateId(new_id as u32), guard: None, rhs: to_rhs(default) });
    }
    DstAutomaton::try_new(names, StateId(0), rules)
        .expect("construction yields a deterministic automaton")
}

/// Lifts a path DFA into a tree automaton: the left child advances along the
/// DFA, the right child re-reads the same state, and transitions entering a
/// final state select the node they consume.
fn lift_dfa(dfa: &PathDfa) -> DstAutomaton {
    let states = (0..dfa.state_count())
        .map(|s| {
            let st = dfa.state(s);
            let lift = |t: usize| (t, s, dfa.state(t).is_final);
            let exceptions =
                st.exceptions.iter().map(|(w, t)| (w.clone(), lift(*t))).collect();
            (exceptions, lift(st.default))
        })
        .collect();
    finalize_dst(RawDst { states, initial: 0 })
}

/// Determinizes the direction-decorated position NFA for queries containing
/// following-sibling steps.
///
/// Candidate position i means "the current node may match step i". Reading a
/// node with direction d (the branch taken next): candidacy survives when d
/// is a skip move of step i's axis (child and following-sibling skip along
/// R, descendant along L and R), and a test match advances to step i+1 when
/// d is that step's first move (L for child/descendant, R for
/// following-sibling). A rule selects when the last step's candidate
/// matches the consumed label.
fn decorated_subsets(steps: &[Step], cap: usize) -> Result<DstAutomaton> {
    let n = steps.len();
    let skip = |axis: Axis, left: bool| match axis {
        Axis::Child | Axis::FollowingSibling => !left,
        Axis::Descendant => true,
    };
    let first_is_left = |axis: Axis| match axis {
        Axis::Child | Axis::Descendant => true,
        Axis::FollowingSibling => false,
    };
    let mentioned = mentioned_labels(steps);
    let delta = |set: &[u16], label: Option<&str>, left: bool| -> Vec<u16> {
        let mut out = BTreeSet::new();
        for &p in set {
            let i = p as usize;
            if skip(steps[i].axis, left) {
                out.insert(p);
            }
            if steps[i].test.matches(label)
                && i + 1 < n
                && first_is_left(steps[i + 1].axis) == left
            {
                out.insert(p + 1);
            }
        }
        out.into_iter().collect()
    };
    let selects = |set: &[u16], label: Option<&str>| {
        set.contains(&(n as u16 - 1)) && steps[n - 1].test.matches(label)
    };

    let mut interner = SubsetInterner::new(cap);
    interner.intern(vec![0])?;
    let mut states: Vec<(BTreeMap<String, RawRhs>, RawRhs)> = Vec::new();
    let mut i = 0;
    while i < interner.sets.len() {
        let set = interner.sets[i].clone();
        let rhs_for = |label: Option<&str>, interner: &mut SubsetInterner| -> Result<RawRhs> {
            let l = interner.intern(delta(&set, label, true))?;
            let r = interner.intern(delta(&set, label, false))?;
            Ok((l, r, selects(&set, label)))
        };
        let default = rhs_for(None, &mut interner)?;
        let mut exceptions = BTreeMap::new();
        for w in &mentioned {
            let rhs = rhs_for(Some(w), &mut interner)?;
            if rhs != default {
                exceptions.insert(w.clone(), rhs);
            }
        }
        states.push((exceptions, default));
        i += 1;
    }
    Ok(finalize_dst(RawDst { states, initial: 0 }))
}

/// Compiles a query into a deterministic selecting top-down tree automaton
/// with `A(t) = Q(t)` on every tree.
pub fn query_to_dst(q: &XPathQuery, cap: usize) -> Result<DstAutomaton> {
    if q.steps.iter().any(|s| s.axis == Axis::FollowingSibling) {
        decorated_subsets(&q.steps, cap)
    } else {
        Ok(lift_dfa(&segment_to_dfa(&q.steps, cap)?))
    }
}
