//! Crate-wide error type and validation violations.

use std::fmt;

/// A single invariant violation found by one of the `validate` operations.
///
/// Violations carry the offending item (nonterminal, state) and a path or
/// position inside it, so a batch of them reads like a lint report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Nonterminal or state the violation was found in, if any.
    pub subject: Option<String>,
    /// Position inside the subject (pre-order path of child indices, or a rule index).
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(subject: impl Into<Option<String>>, path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { subject: subject.into(), path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subject {
            Some(s) if self.path.is_empty() => write!(f, "{}: {}", s, self.message),
            Some(s) => write!(f, "{} at {}: {}", s, self.path, self.message),
            None if self.path.is_empty() => write!(f, "{}", self.message),
            None => write!(f, "at {}: {}", self.path, self.message),
        }
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("XML parse error at line {line}, column {column}: {message}")]
    XmlParse { line: usize, column: usize, message: String },

    #[error("invalid label {text:?}: {message}")]
    InvalidLabel { text: String, message: String },

    #[error("grammar parse error at line {line}, column {column}: {message}")]
    GrammarParse { line: usize, column: usize, message: String },

    #[error("invalid grammar: {}", join_violations(.0))]
    GrammarInvalid(Vec<Violation>),

    #[error("automaton parse error at line {line}: {message}")]
    AutomatonParse { line: usize, message: String },

    #[error("invalid automaton: {}", join_violations(.0))]
    AutomatonInvalid(Vec<Violation>),

    #[error("SLP parse error at line {line}: {message}")]
    SlpParse { line: usize, message: String },

    #[error("invalid SLP: {}", join_violations(.0))]
    SlpInvalid(Vec<Violation>),

    #[error("XPath parse error: {message}")]
    XPathParse { message: String },

    #[error("unsupported XPath construct {construct:?}: {message}")]
    XPathUnsupported { construct: String, message: String },

    #[error("DFA construction exceeded the state cap of {cap} states")]
    DfaStateCap { cap: usize },

    #[error("expansion of {needed} labeled nodes exceeds the limit of {limit}")]
    ExpansionLimit { needed: String, limit: u64 },

    #[error("SLP expansion of {needed} tokens exceeds the limit of {limit}")]
    SlpExpansionLimit { needed: String, limit: u64 },

    #[error("result id {id} is out of range (document has {total} labeled nodes)")]
    ResultOutOfRange { id: String, total: String },

    #[error("result ids must be strictly increasing and free of duplicates (offending id {id})")]
    ResultNotIncreasing { id: String },

    #[error("operation requires a grammar of rank 0, but this grammar has rank {rank}")]
    NotRankZero { rank: u32 },

    #[error("the root of the encoded tree has a next sibling; the tree is a forest, not a document")]
    RootHasSibling,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code convention: 1 for usage/parse/validation errors,
    /// 2 for exceeded limits.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DfaStateCap { .. }
            | Error::ExpansionLimit { .. }
            | Error::SlpExpansionLimit { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
