//! The `.wst` scenario language.
//!
//! ```text
//! document   := prefixDecl* (stateBlock | mapBlock | ruleBlock | goalBlock)*
//! prefixDecl := "prefix" NAME ":" IRI
//! stateBlock := "state" "{" (fact ".")* "}"
//! mapBlock   := "map" qname "{" transition* "}"
//! transition := "transition" qname "{" "from" graph "during" graph "to" graph
//!               "duration" duration "cost" number "belief" number "comfort" number
//!               "condition" graph "}"
//! ruleBlock  := "rule" "{" graph "<=" graph "}"
//! goalBlock  := "goal" qname "{" "target" graph
//!               "limits" "(" duration number number number ")"
//!               ("report" "(" variable* ")")? "}"
//! graph      := "{" ((triple | guard) ".")* "}"
//! guard      := term builtin term ("->" variable)?
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

mod lexer;
mod parser;
mod print;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{validate, Category, ScenarioDocument, Violation};
use crate::fact::FactSet;

pub use print::serialize;

/// A located problem in a source text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.category, self.message)?;
        if let Some(path) = &self.path {
            write!(f, " (at {path})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DslError {
    /// The text is not syntactically well formed; only the first error is
    /// reported.
    #[error("{0}")]
    Parse(Diagnostic),
    /// The text parsed but violates document invariants; every violation is
    /// listed.
    #[error("{} validation error(s), first: {}", .0.len(), .0[0])]
    Validation(Vec<Diagnostic>),
}

impl DslError {
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            DslError::Parse(d) => vec![d.clone()],
            DslError::Validation(ds) => ds.clone(),
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse(source: &str) -> Result<ScenarioDocument, DslError> {
    let parsed = parser::parse_document(source).map_err(DslError::Parse)?;
    let mut diagnostics = parsed.diagnostics;
    for v in validate(&parsed.doc) {
        diagnostics.push(locate(&v, &parsed.spans));
    }
    if diagnostics.is_empty() {
        Ok(parsed.doc)
    } else {
        diagnostics.sort_by_key(|d| (d.line, d.column));
        Err(DslError::Validation(diagnostics))
    }
}

/// Parses ground facts written as `subject predicate object .` statements,
/// checking their prefixes against `prefixes`.
pub fn parse_facts(source: &str, prefixes: &BTreeMap<String, String>) -> Result<FactSet, DslError> {
    let (facts, mut diagnostics) = parser::parse_fact_list(source).map_err(DslError::Parse)?;
    for (fact, pos) in &facts {
        let symbols = [fact.subject(), fact.object()]
            .into_iter()
            .filter_map(|t| match t {
                crate::term::Term::Symbol(s) => Some(s),
                _ => None,
            })
            .chain(std::iter::once(fact.predicate()));
        for s in symbols {
            if !prefixes.contains_key(s.prefix()) {
                diagnostics.push(Diagnostic {
                    line: pos.line,
                    column: pos.column,
                    category: Category::UnknownPrefix,
                    path: None,
                    message: format!("prefix `{}:` is not declared", s.prefix()),
                });
            }
        }
    }
    if diagnostics.is_empty() {
        Ok(facts.into_iter().map(|(f, _)| f).collect())
    } else {
        Err(DslError::Validation(diagnostics))
    }
}

/// Maps a violation path to the closest recorded source position.
fn locate(v: &Violation, spans: &HashMap<String, lexer::Pos>) -> Diagnostic {
    let mut key = v.path.as_str();
    let pos = loop {
        if let Some(p) = spans.get(key) {
            break *p;
        }
        match key.rfind(['.', '[']) {
            Some(cut) => key = &key[..cut],
            None => break lexer::Pos { line: 1, column: 1 },
        }
    };
    Diagnostic {
        line: pos.line,
        column: pos.column,
        category: v.category,
        path: Some(v.path.clone()),
        message: v.message.clone(),
    }
}
