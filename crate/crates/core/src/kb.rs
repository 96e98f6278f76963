//! Background knowledge: backward rules, their closure over a base fact set,
//! and the versioned world state built on top of it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fact::{match_sourced, match_union, substitute, Binding, FactSet, Pattern};

/// Default cap on the number of derived facts before saturation gives up.
pub const DEFAULT_DERIVED_CAP: usize = 100_000;

/// `head <= body`: whenever `body` matches, the instantiated `head` holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackwardRule {
    pub head: Pattern,
    pub body: Pattern,
}

impl BackwardRule {
    pub fn new(head: Pattern, body: Pattern) -> Self {
        BackwardRule { head, body }
    }

    /// Safe rules bind every head variable in the body and carry no guards
    /// in the head.
    pub fn is_safe(&self) -> bool {
        let bound = self.body.bound_vars();
        self.head.guards.is_empty() && self.head.triples.iter().flat_map(|t| t.vars()).all(|v| bound.contains(v))
    }
}

/// Facts derivable from `base` under `rules` that are not already in `base`.
pub fn saturate(base: &FactSet, rules: &[BackwardRule]) -> Result<FactSet, Error> {
    saturate_capped(base, rules, DEFAULT_DERIVED_CAP)
}

/// Semi-naive least fixpoint: each round only considers rule firings that use
/// at least one fact produced by the previous round.
pub fn saturate_capped(base: &FactSet, rules: &[BackwardRule], cap: usize) -> Result<FactSet, Error> {
    let mut derived = FactSet::new();
    let mut delta = base.clone();
    let mut first_round = true;
    let seed = Binding::new();

    loop {
        let mut fresh = FactSet::new();
        for rule in rules {
            let n = rule.body.triples.len();
            let mut bindings = Vec::new();
            if n == 0 {
                if first_round {
                    bindings.extend(match_sourced(&rule.body, &[], &seed)?);
                }
            } else {
                let all: [&FactSet; 2] = [base, &derived];
                let newest: [&FactSet; 1] = [&delta];
                for pivot in 0..n {
                    let sources: Vec<&[&FactSet]> =
                        (0..n).map(|j| if j == pivot { &newest[..] } else { &all[..] }).collect();
                    bindings.extend(match_sourced(&rule.body, &sources, &seed)?);
                }
            }
            for b in bindings {
                for fact in substitute(&rule.head, &b)? {
                    if !base.contains(&fact) && !derived.contains(&fact) {
                        fresh.insert(fact);
                    }
                }
            }
        }
        first_round = false;
        if fresh.is_empty() {
            return Ok(derived);
        }
        derived.extend(fresh.iter().cloned());
        if derived.len() > cap {
            return Err(Error::FixpointOverflow { cap });
        }
        delta = fresh;
    }
}

/// Asserted facts, their derived closure and a version counter. Cloning is
/// cheap; every mutation produces a new snapshot.
#[derive(Clone, Debug)]
pub struct WorldState {
    base: Arc<FactSet>,
    derived: Arc<FactSet>,
    version: u64,
    rules: Arc<[BackwardRule]>,
}

impl WorldState {
    pub fn new(base: FactSet, rules: Arc<[BackwardRule]>) -> Result<Self, Error> {
        let derived = saturate(&base, &rules)?;
        Ok(WorldState { base: Arc::new(base), derived: Arc::new(derived), version: 0, rules })
    }

    /// Restores a snapshot at a known version (used when loading sessions).
    pub fn at_version(base: FactSet, rules: Arc<[BackwardRule]>, version: u64) -> Result<Self, Error> {
        let mut state = Self::new(base, rules)?;
        state.version = version;
        Ok(state)
    }

    pub fn base(&self) -> &FactSet {
        &self.base
    }

    pub fn derived(&self) -> &FactSet {
        &self.derived
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn rules(&self) -> &Arc<[BackwardRule]> {
        &self.rules
    }

    /// Base plus derived facts.
    pub fn all_facts(&self) -> FactSet {
        self.base.union(&self.derived)
    }

    pub fn hash(&self) -> String {
        self.base.canonical_hash()
    }

    /// A successor snapshot with a new base and the next version.
    pub fn with_base(&self, base: FactSet) -> Result<Self, Error> {
        let derived = saturate(&base, &self.rules)?;
        Ok(WorldState {
            base: Arc::new(base),
            derived: Arc::new(derived),
            version: self.version + 1,
            rules: self.rules.clone(),
        })
    }

    /// Same facts, next version.
    pub fn bumped(&self) -> Self {
        WorldState { version: self.version + 1, ..self.clone() }
    }

    /// Matches against base and derived facts.
    pub fn query(&self, pattern: &Pattern) -> Result<Vec<Binding>, Error> {
        self.query_seeded(pattern, &Binding::new())
    }

    pub fn query_seeded(&self, pattern: &Pattern, seed: &Binding) -> Result<Vec<Binding>, Error> {
        match_union(pattern, &[&self.base, &self.derived], seed)
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            version: self.version,
            hash: self.hash(),
            base: (*self.base).clone(),
            derived: (*self.derived).clone(),
        }
    }
}

/// Serializable view of a [`WorldState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateSnapshot {
    pub version: u64,
    pub hash: String,
    pub base: FactSet,
    pub derived: FactSet,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact::{match_pattern, Fact, TriplePattern};
    use crate::term::{Symbol, Term};

    fn sym(s: &str) -> Term {
        Term::symbol(s).unwrap()
    }

    fn var(s: &str) -> Term {
        Term::var(s).unwrap()
    }

    fn tp(s: Term, p: &str, o: Term) -> TriplePattern {
        TriplePattern::new(s, Symbol::new(p).unwrap(), o)
    }

    fn fact(s: &str, p: &str, o: &str) -> Fact {
        Fact::new(sym(s), Symbol::new(p).unwrap(), sym(o)).unwrap()
    }

    fn alert_rule() -> BackwardRule {
        BackwardRule::new(
            Pattern::triples(vec![tp(var("patient"), "gps:alert", sym("conflict:Pramipexol_surgery_colon_cancer"))]),
            Pattern::triples(vec![
                tp(var("patient"), "gps:medication", sym("med:Pramipexol")),
                tp(var("patient"), "gps:surgery", sym("surgery:surgery_colon_cancer")),
            ]),
        )
    }

    #[test]
    fn alert_rule_fires() {
        let base: FactSet = [
            fact("ex:pat1", "gps:medication", "med:Pramipexol"),
            fact("ex:pat1", "gps:surgery", "surgery:surgery_colon_cancer"),
        ]
        .into_iter()
        .collect();
        let derived = saturate(&base, &[alert_rule()]).unwrap();
        assert_eq!(derived.len(), 1);
        assert!(derived.contains(&fact("ex:pat1", "gps:alert", "conflict:Pramipexol_surgery_colon_cancer")));

        let state = WorldState::new(base, vec![alert_rule()].into()).unwrap();
        let alert = Pattern::triples(vec![tp(var("p"), "gps:alert", var("g"))]);
        assert_eq!(state.query(&alert).unwrap().len(), 1);
    }

    #[test]
    fn no_rules_derive_nothing() {
        let base: FactSet = [fact("ex:a", "ex:p", "ex:b")].into_iter().collect();
        assert!(saturate(&base, &[]).unwrap().is_empty());
        let empty = WorldState::new(FactSet::new(), Vec::new().into()).unwrap();
        assert!(empty.query(&Pattern::triples(vec![tp(var("x"), "ex:p", var("y"))])).unwrap().is_empty());
    }

    #[test]
    fn transitive_chain_reaches_fixpoint() {
        let rule = BackwardRule::new(
            Pattern::triples(vec![tp(var("x"), "ex:reach", var("z"))]),
            Pattern::triples(vec![tp(var("x"), "ex:reach", var("y")), tp(var("y"), "ex:edge", var("z"))]),
        );
        let seed = BackwardRule::new(
            Pattern::triples(vec![tp(var("x"), "ex:reach", var("y"))]),
            Pattern::triples(vec![tp(var("x"), "ex:edge", var("y"))]),
        );
        let base: FactSet = (0..5).map(|i| fact(&format!("ex:n{i}"), "ex:edge", &format!("ex:n{}", i + 1))).collect();
        let derived = saturate(&base, &[rule, seed]).unwrap();
        // 6 nodes in a line: 15 reachability pairs.
        assert_eq!(derived.len(), 15);
        assert!(derived.contains(&fact("ex:n0", "ex:reach", "ex:n5")));
    }

    #[test]
    fn runaway_rules_hit_the_cap() {
        let rule = BackwardRule::new(
            Pattern::triples(vec![tp(var("x"), "ex:r", var("y"))]),
            Pattern::triples(vec![tp(var("x"), "ex:node", sym("ex:yes")), tp(var("y"), "ex:node", sym("ex:yes"))]),
        );
        let base: FactSet = (0..20).map(|i| fact(&format!("ex:n{i}"), "ex:node", "ex:yes")).collect();
        assert_eq!(saturate_capped(&base, std::slice::from_ref(&rule), 100), Err(Error::FixpointOverflow { cap: 100 }));
        assert_eq!(saturate(&base, &[rule]).unwrap().len(), 400);
    }

    #[test]
    fn versions_increase() {
        let s0 = WorldState::new(FactSet::new(), Vec::new().into()).unwrap();
        let s1 = s0.with_base([fact("ex:a", "ex:p", "ex:b")].into_iter().collect()).unwrap();
        assert_eq!(s1.version(), 1);
        assert_eq!(s1.bumped().version(), 2);
        assert_eq!(s0.version(), 0);
    }

    #[test]
    fn query_equals_match_against_closure() {
        let base: FactSet = [
            fact("ex:pat1", "gps:medication", "med:Pramipexol"),
            fact("ex:pat1", "gps:surgery", "surgery:surgery_colon_cancer"),
        ]
        .into_iter()
        .collect();
        let state = WorldState::new(base.clone(), vec![alert_rule()].into()).unwrap();
        let closure = base.union(&saturate(&base, &[alert_rule()]).unwrap());
        let pattern = Pattern::triples(vec![tp(var("p"), "gps:alert", var("g"))]);
        assert_eq!(state.query(&pattern).unwrap(), match_pattern(&pattern, &closure, &Binding::new()).unwrap());
    }
}
