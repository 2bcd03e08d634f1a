//! Deterministic selecting top-down tree automata.
//!
//! An automaton runs over binary trees: in state `q` at a node labeled `w`
//! it applies the rule with left-hand side `(q,w)`, or the state's default
//! rule `(q,%)` when no such rule exists, and descends into the left child
//! in the first right-hand state and the right child in the second.
//! Selecting rules (written `=>`) mark the current node as a result.
//! Every state has exactly one default rule and at most one rule per label,
//! so the run — and the selected node set — is unique.

use crate::error::{Error, Result, Violation};
use crate::tree::BinTree;
use std::collections::HashMap;

/// Index of an automaton state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

/// Right-hand side of a rule: successor states and the selecting flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleRhs {
    pub left: StateId,
    pub right: StateId,
    pub selecting: bool,
}

/// A raw rule; `guard` is `None` for the `%` default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DstRule {
    pub state: StateId,
    pub guard: Option<String>,
    pub rhs: RuleRhs,
}

#[derive(Debug, Clone)]
struct StateTable {
    by_label: HashMap<String, RuleRhs>,
    default: RuleRhs,
}

/// A validated automaton with O(1) expected rule lookup.
#[derive(Debug, Clone)]
pub struct DstAutomaton {
    state_names: Vec<String>,
    initial: StateId,
    rules: Vec<DstRule>,
    table: Vec<StateTable>,
}

/// Checks the determinism conditions on a raw rule list: exactly one default
/// per state, at most one rule per (state, label), states in range.
pub fn validate_rules(
    state_names: &[String],
    initial: StateId,
    rules: &[DstRule],
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let n = state_names.len() as u32;
    let name = |s: StateId| {
        state_names.get(s.0 as usize).cloned().unwrap_or_else(|| format!("#{}", s.0))
    };
    if initial.0 >= n {
        violations.push(Violation::new(None, "", "initial state is not a known state"));
    }
    let mut defaults = vec![0usize; state_names.len()];
    let mut seen: HashMap<(u32, &str), usize> = HashMap::new();
    for (i, r) in rules.iter().enumerate() {
        let path = format!("rule #{}", i + 1);
        if r.state.0 >= n || r.rhs.left.0 >= n || r.rhs.right.0 >= n {
            violations.push(Violation::new(
                Some(name(r.state)),
                path,
                "rule references an unknown state",
            ));
            continue;
        }
        match &r.guard {
            None => defaults[r.state.0 as usize] += 1,
            Some(w) => {
                if let Some(prev) = seen.insert((r.state.0, w.as_str()), i) {
                    violations.push(Violation::new(
                        Some(name(r.state)),
                        path,
                        format!("duplicate rule for ({}, {w}); first at rule #{}", name(r.state), prev + 1),
                    ));
                }
            }
        }
    }
    for (s, count) in defaults.iter().enumerate() {
        if *count != 1 {
            violations.push(Violation::new(
                Some(state_names[s].clone()),
                "",
                format!("state must have exactly one default rule ({count} found)"),
            ));
        }
    }
    violations
}

impl DstAutomaton {
    /// Builds a validated automaton from raw parts.
    pub fn try_new(
        state_names: Vec<String>,
        initial: StateId,
        rules: Vec<DstRule>,
    ) -> std::result::Result<DstAutomaton, Vec<Violation>> {
        let violations = validate_rules(&state_names, initial, &rules);
        if !violations.is_empty() {
            return Err(violations);
        }
        let mut table: Vec<StateTable> = state_names
            .iter()
            .map(|_| StateTable {
                by_label: HashMap::new(),
                default: RuleRhs { left: initial, right: initial, selecting: false },
            })
            .collect();
        for r in &rules {
            match &r.guard {
                None => table[r.state.0 as usize].default = r.rhs,
                Some(w) => {
                    table[r.state.0 as usize].by_label.insert(w.clone(), r.rhs);
                }
            }
        }
        Ok(DstAutomaton { state_names, initial, rules, table })
    }

    /// Re-checks the determinism conditions; empty on any constructed value.
    pub fn validate(&self) -> Vec<Violation> {
        validate_rules(&self.state_names, self.initial, &self.rules)
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.0 as usize]
    }

    pub fn rules(&self) -> &[DstRule] {
        &self.rules
    }

    /// The rule applied in state `q` at a node labeled `w`: the specific
    /// `(q,w)` rule if present, the state's default otherwise. Marks on the
    /// label are display metadata and do not participate in matching.
    pub fn lookup(&self, q: StateId, label_text: &str) -> (RuleRhs, bool) {
        let t = &self.table[q.0 as usize];
        match t.by_label.get(label_text) {
            Some(rhs) => (*rhs, false),
            None => (t.default, true),
        }
    }

    /// Runs the automaton from the root in the initial state and returns the
    /// pre-order numbers of all selected nodes, ascending.
    pub fn run(&self, tree: &BinTree) -> Vec<u64> {
        let mut selected = Vec::new();
        let Some(root) = tree.root() else {
            return selected;
        };
        let mut preorder: u64 = 0;
        // Work stack in reverse-visit order keeps the output sorted.
        let mut stack = vec![(root, self.initial)];
        while let Some((id, q)) = stack.pop() {
            preorder += 1;
            let n = tree.node(id);
            let (rhs, _) = self.lookup(q, n.label.text());
            if rhs.selecting {
                selected.push(preorder);
            }
            if let Some(r) = n.right {
                stack.push((r, rhs.right));
            }
            if let Some(l) = n.left {
                stack.push((l, rhs.left));
            }
        }
        selected
    }

    /// Renaming-invariant rendering: states are renumbered in breadth-first
    /// discovery order from the initial state, exploring label-sorted
    /// exceptions before the default. Isomorphic automata render equally.
    pub fn canonical_form(&self) -> String {
        let mut canon: HashMap<u32, usize> = HashMap::new();
        let mut queue = vec![self.initial];
        canon.insert(self.initial.0, 0);
        let mut i = 0;
        while i < queue.len() {
            let q = queue[i];
            i += 1;
            let t = &self.table[q.0 as usize];
            let mut labels: Vec<&String> = t.by_label.keys().collect();
            labels.sort();
            let mut successors = Vec::new();
            for w in labels {
                let rhs = t.by_label[w];
                successors.push(rhs.left);
                successors.push(rhs.right);
            }
            successors.push(t.default.left);
            successors.push(t.default.right);
            for s in successors {
                if !canon.contains_key(&s.0) {
                    canon.insert(s.0, canon.len());
                    queue.push(s);
                }
            }
        }
        let mut lines = Vec::new();
        for &q in &queue {
            let t = &self.table[q.0 as usize];
            let mut labels: Vec<&String> = t.by_label.keys().collect();
            labels.sort();
            for w in labels {
                let rhs = t.by_label[w];
                lines.push(render_rule(canon[&q.0], Some(w), canon[&rhs.left.0], canon[&rhs.right.0], rhs.selecting));
            }
            let d = t.default;
            lines.push(render_rule(canon[&q.0], None, canon[&d.left.0], canon[&d.right.0], d.selecting));
        }
        lines.join("\n")
    }
}

fn render_rule(q: usize, w: Option<&str>, l: usize, r: usize, selecting: bool) -> String {
    let arrow = if selecting { "=>" } else { "->" };
    format!("q{q},{} {arrow} q{l},q{r}", w.unwrap_or("%"))
}

/// Parses the rule-per-line dump format: `q,w -> q1,q2` or `q,w => q1,q2`,
/// with `%` as the default guard. The first rule's state is the initial one.
pub fn parse_automaton(text: &str) -> Result<DstAutomaton> {
    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, StateId> = HashMap::new();
    let intern = |s: &str, names: &mut Vec<String>, ids: &mut HashMap<String, StateId>| {
        if let Some(id) = ids.get(s) {
            return *id;
        }
        let id = StateId(names.len() as u32);
        names.push(s.to_string());
        ids.insert(s.to_string(), id);
        id
    };
    let mut rules = Vec::new();
    let mut initial = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |m: String| Error::AutomatonParse { line: line_no, message: m };
        let (selecting, lhs, rhs) = match (trimmed.split_once("=>"), trimmed.split_once("->")) {
            (Some((l, r)), _) => (true, l, r),
            (None, Some((l, r))) => (false, l, r),
            _ => return Err(err("expected `q,w -> q1,q2` or `q,w => q1,q2`".into())),
        };
        let Some((q, w)) = lhs.split_once(',') else {
            return Err(err("left-hand side must be `state,label` or `state,%`".into()));
        };
        let Some((l, r)) = rhs.split_once(',') else {
            return Err(err("right-hand side must be `state,state`".into()));
        };
        let (q, w, l, r) = (q.trim(), w.trim(), l.trim(), r.trim());
        if q.is_empty() || w.is_empty() || l.is_empty() || r.is_empty() {
            return Err(err("empty state or label".into()));
        }
        let state = intern(q, &mut names, &mut ids);
        initial.get_or_insert(state);
        let guard = if w == "%" { None } else { Some(w.to_string()) };
        let rhs = RuleRhs {
            left: intern(l, &mut names, &mut ids),
            right: intern(r, &mut names, &mut ids),
            selecting,
        };
        rules.push(DstRule { state, guard, rhs });
    }
    let Some(initial) = initial else {
        return Err(Error::AutomatonParse { line: 1, message: "automaton file contains no rules".into() });
    };
    DstAutomaton::try_new(names, initial, rules).map_err(Error::AutomatonInvalid)
}

/// Writes the dump format; rules of the initial state come first, the rest
/// keep their original order.
pub fn write_automaton(a: &DstAutomaton) -> String {
    let mut out = String::new();
    let initial_first = a
        .rules
        .iter()
        .filter(|r| r.state == a.initial)
        .chain(a.rules.iter().filter(|r| r.state != a.initial));
    for r in initial_first {
        let arrow = if r.rhs.selecting { "=>" } else { "->" };
        out.push_str(&format!(
            "{},{} {arrow} {},{}\n",
            a.state_name(r.state),
            r.guard.as_deref().unwrap_or("%"),
            a.state_name(r.rhs.left),
            a.state_name(r.rhs.right),
        ));
    }
    out
}
