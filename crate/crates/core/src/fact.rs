//! Facts, fact sets, patterns and bindings, plus the matcher that joins a
//! pattern against a fact set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::builtin::{self, BuiltinCall, GuardOutcome};
use crate::error::Error;
use crate::term::{Symbol, Term, Var};

/// A ground subject-predicate-object triple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Fact {
    subject: Term,
    predicate: Symbol,
    object: Term,
}

impl Fact {
    pub fn new(subject: Term, predicate: Symbol, object: Term) -> Result<Self, Error> {
        for t in [&subject, &object] {
            if let Term::Variable(v) = t {
                return Err(Error::NotGround(v.clone()));
            }
        }
        Ok(Fact { subject, predicate, object })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Symbol {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl<'de> Deserialize<'de> for Fact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            subject: Term,
            predicate: Symbol,
            object: Term,
        }
        let raw = Raw::deserialize(d)?;
        Fact::new(raw.subject, raw.predicate, raw.object).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// A set of ground facts with canonical (sorted) iteration order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactSet(BTreeSet<Fact>);

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        self.0.insert(fact)
    }

    pub fn remove(&mut self, fact: &Fact) -> bool {
        self.0.remove(fact)
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.0.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> + '_ {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &FactSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &FactSet) -> FactSet {
        FactSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &FactSet) -> FactSet {
        FactSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn extend(&mut self, facts: impl IntoIterator<Item = Fact>) {
        self.0.extend(facts);
    }

    pub fn retain(&mut self, keep: impl FnMut(&Fact) -> bool) {
        self.0.retain(keep);
    }

    /// SHA-256 over the canonical one-fact-per-line rendering, hex encoded.
    /// Independent of insertion order.
    pub fn canonical_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for fact in &self.0 {
            hasher.update(fact.to_string().as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

impl FromIterator<Fact> for FactSet {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        FactSet(iter.into_iter().collect())
    }
}

impl IntoIterator for FactSet {
    type Item = Fact;
    type IntoIter = std::collections::btree_set::IntoIter<Fact>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a FactSet {
    type Item = &'a Fact;
    type IntoIter = std::collections::btree_set::Iter<'a, Fact>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// One triple of a pattern; subject and object may be variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Symbol,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Symbol, object: Term) -> Self {
        TriplePattern { subject, predicate, object }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> + '_ {
        [&self.subject, &self.object].into_iter().filter_map(Term::as_var)
    }

    fn unify(&self, fact: &Fact, binding: &Binding) -> Option<Binding> {
        if self.predicate != fact.predicate {
            return None;
        }
        let mut out = None::<Binding>;
        for (pat, val) in [(&self.subject, &fact.subject), (&self.object, &fact.object)] {
            let current = out.as_ref().unwrap_or(binding);
            match pat {
                Term::Variable(v) => match current.get(v) {
                    Some(bound) if bound == val => {}
                    Some(_) => return None,
                    None => {
                        let mut next = current.clone();
                        next.insert(v.clone(), val.clone());
                        out = Some(next);
                    }
                },
                ground if ground == val => {}
                _ => return None,
            }
        }
        Some(out.unwrap_or_else(|| binding.clone()))
    }

    fn ground(&self, binding: &Binding) -> Result<Fact, Error> {
        let resolve = |t: &Term| match t {
            Term::Variable(v) => binding.get(v).cloned().ok_or_else(|| Error::UnboundVariable(v.clone())),
            t => Ok(t.clone()),
        };
        Fact::new(resolve(&self.subject)?, self.predicate.clone(), resolve(&self.object)?)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// A conjunctive graph pattern: triples joined left to right, then guards
/// evaluated as soon as their inputs are bound.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    pub triples: Vec<TriplePattern>,
    #[serde(default)]
    pub guards: Vec<BuiltinCall>,
}

impl Pattern {
    pub fn new(triples: Vec<TriplePattern>, guards: Vec<BuiltinCall>) -> Self {
        Pattern { triples, guards }
    }

    pub fn triples(triples: Vec<TriplePattern>) -> Self {
        Pattern { triples, guards: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty() && self.guards.is_empty()
    }

    /// Variables bound by the pattern: every triple variable plus every guard
    /// result variable.
    pub fn bound_vars(&self) -> BTreeSet<Var> {
        let mut vars: BTreeSet<Var> = self.triples.iter().flat_map(|t| t.vars().cloned()).collect();
        vars.extend(self.guards.iter().filter_map(|g| g.result.clone()));
        vars
    }

    /// Reports the first guard input that could never be bound, given the
    /// variables already bound by `seed_vars`.
    pub fn first_unbindable(&self, seed_vars: &BTreeSet<Var>) -> Option<(usize, Var)> {
        let mut known: BTreeSet<Var> = seed_vars.clone();
        known.extend(self.triples.iter().flat_map(|t| t.vars().cloned()));
        for (i, guard) in self.guards.iter().enumerate() {
            if let Some(v) = guard.input_vars().find(|v| !known.contains(*v)) {
                return Some((i, v.clone()));
            }
            known.extend(guard.result.clone());
        }
        None
    }
}

/// Variable assignment produced by matching. Iteration is by variable name.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Binding(BTreeMap<Var, Term>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &Var) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: Var, value: Term) -> Option<Term> {
        self.0.insert(var, value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> + '_ {
        self.0.iter()
    }

    /// Keeps only the listed variables.
    pub fn restrict(&self, vars: &[Var]) -> Binding {
        Binding(self.0.iter().filter(|(k, _)| vars.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}

impl FromIterator<(Var, Term)> for Binding {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Binding(iter.into_iter().collect())
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}->{v}")?;
        }
        f.write_str("}")
    }
}

/// Every binding extending `seed` under which all triples of `pattern` are in
/// `facts` and all guards hold, in canonical order.
pub fn match_pattern(pattern: &Pattern, facts: &FactSet, seed: &Binding) -> Result<Vec<Binding>, Error> {
    match_union(pattern, &[facts], seed)
}

/// Like [`match_pattern`], matching against the union of several fact sets.
pub fn match_union(pattern: &Pattern, sources: &[&FactSet], seed: &Binding) -> Result<Vec<Binding>, Error> {
    let per_triple = vec![sources; pattern.triples.len()];
    let mut matcher = Matcher { pattern, sources: &per_triple, out: BTreeSet::new() };
    matcher.solve(0, seed.clone(), 0)?;
    Ok(matcher.out.into_iter().collect())
}

/// Matches with a separate source list per triple (used by semi-naive
/// saturation, where one triple is restricted to the newest facts).
pub(crate) fn match_sourced(
    pattern: &Pattern,
    sources: &[&[&FactSet]],
    seed: &Binding,
) -> Result<BTreeSet<Binding>, Error> {
    debug_assert_eq!(sources.len(), pattern.triples.len());
    let mut matcher = Matcher { pattern, sources, out: BTreeSet::new() };
    matcher.solve(0, seed.clone(), 0)?;
    Ok(matcher.out)
}

struct Matcher<'a> {
    pattern: &'a Pattern,
    sources: &'a [&'a [&'a FactSet]],
    out: BTreeSet<Binding>,
}

impl Matcher<'_> {
    fn solve(&mut self, idx: usize, mut binding: Binding, mut next_guard: usize) -> Result<(), Error> {
        let guards = &self.pattern.guards;
        while let Some(guard) = guards.get(next_guard) {
            if !guard.input_vars().all(|v| binding.get(v).is_some()) {
                break;
            }
            match builtin::eval(guard, &binding)? {
                GuardOutcome::Holds(true) => {}
                GuardOutcome::Holds(false) => return Ok(()),
                GuardOutcome::Value(var, value) => match binding.get(&var) {
                    Some(Term::Number(existing)) => {
                        if !builtin::approx_eq(existing.value(), value.value()) {
                            return Ok(());
                        }
                    }
                    Some(other) => {
                        return Err(Error::TypeMismatch { op: guard.op.name(), found: other.kind().to_string() })
                    }
                    None => {
                        binding.insert(var, Term::Number(value));
                    }
                },
            }
            next_guard += 1;
        }

        let Some(triple) = self.pattern.triples.get(idx) else {
            if let Some(guard) = guards.get(next_guard) {
                let missing = guard.input_vars().find(|v| binding.get(v).is_none()).cloned();
                return Err(Error::GuardUnbound(missing.expect("guard stalled on a bound input")));
            }
            self.out.insert(binding);
            return Ok(());
        };

        for facts in self.sources[idx] {
            for fact in facts.iter() {
                if let Some(next) = triple.unify(fact, &binding) {
                    self.solve(idx + 1, next, next_guard)?;
                }
            }
        }
        Ok(())
    }
}

/// Grounds the triples of `pattern` under `binding`. Guards are not emitted.
pub fn substitute(pattern: &Pattern, binding: &Binding) -> Result<FactSet, Error> {
    pattern.triples.iter().map(|t| t.ground(binding)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::BuiltinOp;

    fn sym(s: &str) -> Symbol {
        Symbol::new(s).unwrap()
    }

    fn fact(s: &str, p: &str, o: Term) -> Fact {
        Fact::new(Term::symbol(s).unwrap(), sym(p), o).unwrap()
    }

    fn num(v: f64) -> Term {
        Term::number(v).unwrap()
    }

    fn var(n: &str) -> Term {
        Term::var(n).unwrap()
    }

    fn v(n: &str) -> Var {
        Var::new(n).unwrap()
    }

    #[test]
    fn single_triple_lookup() {
        let facts: FactSet = [fact("ex:pat1", "care:tumor_size", num(50.0))].into_iter().collect();
        let p = Pattern::triples(vec![TriplePattern::new(var("p"), sym("care:tumor_size"), var("s"))]);
        let got = match_pattern(&p, &facts, &Binding::new()).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].get(&v("p")), Some(&Term::symbol("ex:pat1").unwrap()));
        assert_eq!(got[0].get(&v("s")), Some(&num(50.0)));
    }

    #[test]
    fn comparison_guard_filters() {
        let p = Pattern::new(
            vec![TriplePattern::new(var("p"), sym("care:tnm_t"), var("t"))],
            vec![BuiltinCall::compare(BuiltinOp::GreaterThan, var("t"), num(2.0)).unwrap()],
        );
        let three: FactSet = [fact("ex:pat1", "care:tnm_t", num(3.0))].into_iter().collect();
        let two: FactSet = [fact("ex:pat1", "care:tnm_t", num(2.0))].into_iter().collect();
        assert_eq!(match_pattern(&p, &three, &Binding::new()).unwrap().len(), 1);
        assert!(match_pattern(&p, &two, &Binding::new()).unwrap().is_empty());
    }

    #[test]
    fn arithmetic_guard_binds_result() {
        let p = Pattern::new(
            vec![TriplePattern::new(var("p"), sym("care:tumor_size"), var("s"))],
            vec![BuiltinCall::arithmetic(BuiltinOp::Product, var("s"), num(0.7), v("n")).unwrap()],
        );
        let facts: FactSet = [fact("ex:pat1", "care:tumor_size", num(50.0))].into_iter().collect();
        let got = match_pattern(&p, &facts, &Binding::new()).unwrap();
        assert_eq!(got.len(), 1);
        let n = got[0].get(&v("n")).and_then(Term::as_number).unwrap().value();
        assert!((n - 35.0).abs() < 1e-9);
    }

    #[test]
    fn guard_on_symbol_is_type_mismatch() {
        let p = Pattern::new(
            vec![TriplePattern::new(var("p"), sym("care:stage"), var("t"))],
            vec![BuiltinCall::compare(BuiltinOp::GreaterThan, var("t"), num(2.0)).unwrap()],
        );
        let facts: FactSet = [fact("ex:pat1", "care:stage", Term::symbol("care:III").unwrap())].into_iter().collect();
        assert!(matches!(match_pattern(&p, &facts, &Binding::new()), Err(Error::TypeMismatch { .. })));
    }

    #[test]
    fn guard_with_unbindable_input() {
        let p = Pattern::new(
            vec![TriplePattern::new(var("p"), sym("care:tnm_t"), var("t"))],
            vec![BuiltinCall::compare(BuiltinOp::GreaterThan, var("missing"), num(2.0)).unwrap()],
        );
        let facts: FactSet = [fact("ex:pat1", "care:tnm_t", num(3.0))].into_iter().collect();
        assert_eq!(match_pattern(&p, &facts, &Binding::new()), Err(Error::GuardUnbound(v("missing"))));
        assert_eq!(p.first_unbindable(&BTreeSet::new()), Some((0, v("missing"))));
    }

    #[test]
    fn seed_restricts_matches() {
        let facts: FactSet = [
            fact("ex:pat1", "care:tumor_size", num(50.0)),
            fact("ex:pat2", "care:tumor_size", num(20.0)),
        ]
        .into_iter()
        .collect();
        let p = Pattern::triples(vec![TriplePattern::new(var("p"), sym("care:tumor_size"), var("s"))]);
        assert_eq!(match_pattern(&p, &facts, &Binding::new()).unwrap().len(), 2);
        let seed: Binding = [(v("p"), Term::symbol("ex:pat2").unwrap())].into_iter().collect();
        let got = match_pattern(&p, &facts, &seed).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].get(&v("s")), Some(&num(20.0)));
    }

    #[test]
    fn empty_pattern_yields_the_seed() {
        let got = match_pattern(&Pattern::default(), &FactSet::new(), &Binding::new()).unwrap();
        assert_eq!(got, vec![Binding::new()]);
    }

    #[test]
    fn substitute_grounds_and_reports_unbound() {
        let p = Pattern::triples(vec![TriplePattern::new(var("p"), sym("care:tumor_size"), var("n"))]);
        let b: Binding = [(v("p"), Term::symbol("ex:pat1").unwrap()), (v("n"), num(35.0))].into_iter().collect();
        let out = substitute(&p, &b).unwrap();
        assert!(out.contains(&fact("ex:pat1", "care:tumor_size", num(35.0))));
        assert!(substitute(&Pattern::default(), &Binding::new()).unwrap().is_empty());
        let partial: Binding = [(v("p"), Term::symbol("ex:pat1").unwrap())].into_iter().collect();
        assert_eq!(substitute(&p, &partial), Err(Error::UnboundVariable(v("n"))));
    }

    #[test]
    fn substitute_transition_state() {
        let p = Pattern::triples(vec![TriplePattern::new(
            var("p"),
            sym("gps:therapy"),
            Term::symbol("therapy:Neoadjuvant_chemoradiotherapy").unwrap(),
        )]);
        let b: Binding = [(v("p"), Term::symbol("ex:pat1").unwrap())].into_iter().collect();
        let out = substitute(&p, &b).unwrap();
        assert_eq!(out.iter().next().unwrap().to_string(), "ex:pat1 gps:therapy therapy:Neoadjuvant_chemoradiotherapy");
    }

    #[test]
    fn ground_facts_only() {
        assert!(Fact::new(var("x"), sym("ex:p"), num(1.0)).is_err());
    }
}
