//! Proptest generators over a tiny closed vocabulary, small enough that
//! random patterns and rules actually hit.

use proptest::prelude::*;

use crate::fact::{Fact, Pattern, TriplePattern};
use crate::kb::BackwardRule;
use crate::term::{Symbol, Term, Var};

const SUBJECTS: [&str; 3] = ["ex:a", "ex:b", "ex:c"];
const PREDICATES: [&str; 3] = ["ex:p", "ex:q", "ex:r"];
const OBJECTS: [&str; 4] = ["ex:a", "ex:b", "ex:c", "ex:d"];
const VARS: [&str; 3] = ["x", "y", "z"];

fn sym(s: &str) -> Symbol {
    Symbol::new(s).expect("static vocabulary")
}

fn st(s: &str) -> Term {
    Term::Symbol(sym(s))
}

pub fn fact() -> impl Strategy<Value = Fact> {
    (0..SUBJECTS.len(), 0..PREDICATES.len(), 0..OBJECTS.len())
        .prop_map(|(s, p, o)| Fact::new(st(SUBJECTS[s]), sym(PREDICATES[p]), st(OBJECTS[o])).expect("ground"))
}

pub fn facts(max: usize) -> impl Strategy<Value = Vec<Fact>> {
    prop::collection::vec(fact(), 0..=max)
}

fn slot() -> impl Strategy<Value = Term> {
    prop_oneof![
        (0..VARS.len()).prop_map(|i| Term::Variable(Var::new(VARS[i]).expect("static vocabulary"))),
        (0..OBJECTS.len()).prop_map(|i| st(OBJECTS[i])),
    ]
}

pub fn triple() -> impl Strategy<Value = TriplePattern> {
    (slot(), 0..PREDICATES.len(), slot()).prop_map(|(s, p, o)| TriplePattern::new(s, sym(PREDICATES[p]), o))
}

/// Safe rules: every head variable is drawn from the body. Heads may use
/// `ex:s`, which no base fact carries, so some derivations are new.
pub fn rule() -> impl Strategy<Value = BackwardRule> {
    (prop::collection::vec(triple(), 1..=2), 0..3usize, 0..3usize, 0..3usize).prop_map(|(body, hs, hp, ho)| {
        let body_vars: Vec<Term> = body.iter().flat_map(|t| t.vars().cloned()).map(Term::Variable).collect();
        let pick = |i: usize, fallback: &str| body_vars.get(i).cloned().unwrap_or_else(|| st(fallback));
        let head = TriplePattern::new(pick(hs, "ex:a"), sym(["ex:p", "ex:q", "ex:s"][hp]), pick(ho, "ex:d"));
        BackwardRule::new(Pattern::triples(vec![head]), Pattern::triples(body))
    })
}

pub fn rules(max: usize) -> impl Strategy<Value = Vec<BackwardRule>> {
    prop::collection::vec(rule(), 0..=max)
}
