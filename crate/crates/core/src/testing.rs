//! Random scenario generation and brute-force reference implementations for
//! differential testing. Nothing here is used by the engine itself.
//!
//! The generated vocabulary keeps every variable that reaches a builtin bound
//! to numbers: numeric values only ever appear under `ex:level`.

pub mod laws;
pub mod strategies;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builtin::{eval, BuiltinCall, BuiltinOp, GuardOutcome};
use crate::document::{Goal, MapDefinition, ScenarioDocument};
use crate::engine::TransitionDescription;
use crate::error::Error;
use crate::fact::{Binding, Fact, FactSet, Pattern, TriplePattern};
use crate::kb::{BackwardRule, WorldState};
use crate::term::{DayTimeDuration, Number, Symbol, Term, Var};

const ENTITIES: [&str; 2] = ["ex:a", "ex:b"];
const LABEL_PREDICATES: [&str; 2] = ["ex:p", "ex:q"];
const LABELS: [&str; 3] = ["ex:x", "ex:y", "ex:z"];
const LEVEL: &str = "ex:level";
const DERIVED: &str = "ex:flag";

fn sym(s: &str) -> Symbol {
    Symbol::new(s).expect("static vocabulary")
}

fn st(s: &str) -> Term {
    Term::Symbol(sym(s))
}

fn var(s: &str) -> Var {
    Var::new(s).expect("static vocabulary")
}

fn num(v: f64) -> Term {
    Term::number(v).expect("finite")
}

fn number(v: f64) -> Number {
    Number::new(v).expect("finite")
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty")
}

fn random_fact(rng: &mut ChaCha8Rng) -> Fact {
    let subject = st(pick(rng, &ENTITIES));
    if rng.gen_bool(0.3) {
        Fact::new(subject, sym(LEVEL), num(rng.gen_range(0..4) as f64)).expect("ground")
    } else {
        Fact::new(subject, sym(pick(rng, &LABEL_PREDICATES)), st(pick(rng, &LABELS))).expect("ground")
    }
}

/// A label triple whose subject is `?s` or a constant and whose object is a
/// constant or `object_var`.
fn label_triple(rng: &mut ChaCha8Rng, subject: &Term, object_var: Option<&str>) -> TriplePattern {
    let object = match object_var {
        Some(v) if rng.gen_bool(0.4) => Term::Variable(var(v)),
        _ => st(pick(rng, &LABELS)),
    };
    TriplePattern::new(subject.clone(), sym(pick(rng, &LABEL_PREDICATES)), object)
}

fn random_transition(rng: &mut ChaCha8Rng, index: usize) -> TransitionDescription {
    let subject = if rng.gen_bool(0.75) { Term::Variable(var("s")) } else { st(pick(rng, &ENTITIES)) };
    let numeric = rng.gen_bool(0.35);

    let mut from = vec![if numeric {
        TriplePattern::new(subject.clone(), sym(LEVEL), Term::Variable(var("n")))
    } else {
        label_triple(rng, &subject, Some("o"))
    }];
    if rng.gen_bool(0.3) {
        from.push(label_triple(rng, &subject, None));
    }
    let from_vars: BTreeSet<Var> = from.iter().flat_map(|t| t.vars().cloned()).collect();

    let mut cond_triples = Vec::new();
    if rng.gen_bool(0.4) {
        let p = if rng.gen_bool(0.3) { sym(DERIVED) } else { sym(pick(rng, &LABEL_PREDICATES)) };
        let o = if p.as_str() == DERIVED { st("ex:on") } else { st(pick(rng, &LABELS)) };
        cond_triples.push(TriplePattern::new(subject.clone(), p, o));
    }
    let mut guards = Vec::new();
    let mut to = Vec::new();
    if numeric {
        if rng.gen_bool(0.5) {
            let op = *[BuiltinOp::LessThan, BuiltinOp::GreaterOrEqual, BuiltinOp::NotEqualTo].choose(rng).unwrap();
            guards.push(BuiltinCall::compare(op, Term::Variable(var("n")), num(rng.gen_range(0..4) as f64)).unwrap());
        }
        let op = *[BuiltinOp::Sum, BuiltinOp::Difference, BuiltinOp::Product].choose(rng).unwrap();
        let k = if op == BuiltinOp::Product { 2.0 } else { 1.0 };
        guards.push(BuiltinCall::arithmetic(op, Term::Variable(var("n")), num(k), var("m")).unwrap());
        to.push(TriplePattern::new(subject.clone(), sym(LEVEL), Term::Variable(var("m"))));
    } else {
        let object = if from_vars.contains(&var("o")) && rng.gen_bool(0.3) {
            Term::Variable(var("o"))
        } else {
            st(pick(rng, &LABELS))
        };
        to.push(TriplePattern::new(subject.clone(), sym(pick(rng, &LABEL_PREDICATES)), object));
    }
    if rng.gen_bool(0.3) {
        to.push(label_triple(rng, &subject, None));
    }
    let during = if rng.gen_bool(0.4) {
        vec![TriplePattern::new(subject.clone(), sym("ex:busy"), st(&format!("ex:t{index}")))]
    } else {
        Vec::new()
    };

    TransitionDescription {
        map: sym(if rng.gen_bool(0.5) { "ex:m0" } else { "ex:m1" }),
        action: sym(&format!("ex:t{index}")),
        from: Pattern::triples(from),
        during: Pattern::triples(during),
        to: Pattern::triples(to),
        condition: Pattern::new(cond_triples, guards),
        duration: DayTimeDuration::from_days(rng.gen_range(0..6)),
        cost: number(rng.gen_range(0..50) as f64),
        belief: number([1.0, 0.9, 0.75, 0.5][rng.gen_range(0..4)]),
        comfort: number([1.0, 0.8, 0.6][rng.gen_range(0..3)]),
    }
}

fn random_goal(rng: &mut ChaCha8Rng) -> Goal {
    let subject = if rng.gen_bool(0.5) { Term::Variable(var("g")) } else { st(pick(rng, &ENTITIES)) };
    let target = if rng.gen_bool(0.3) {
        Pattern::new(
            vec![TriplePattern::new(subject, sym(LEVEL), Term::Variable(var("v")))],
            vec![BuiltinCall::compare(BuiltinOp::GreaterThan, Term::Variable(var("v")), num(rng.gen_range(2..6) as f64))
                .unwrap()],
        )
    } else {
        Pattern::triples(vec![TriplePattern::new(subject, sym(pick(rng, &LABEL_PREDICATES)), st(pick(rng, &LABELS)))])
    };
    Goal {
        id: sym("ex:goal"),
        target,
        max_duration: DayTimeDuration::from_days(rng.gen_range(3..20)),
        max_cost: number(rng.gen_range(20..200) as f64),
        min_belief: number([0.0, 0.3, 0.5][rng.gen_range(0..3)]),
        min_comfort: number([0.0, 0.3, 0.5][rng.gen_range(0..3)]),
        report: Vec::new(),
    }
}

/// A small random scenario with one goal `ex:goal`: at most five
/// transitions, at most twenty initial facts and at most one rule.
pub fn random_scenario(seed: u64) -> ScenarioDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut initial_state = FactSet::new();
    for _ in 0..rng.gen_range(2..=12) {
        initial_state.insert(random_fact(&mut rng));
    }
    let mut maps: BTreeMap<Symbol, Vec<TransitionDescription>> = BTreeMap::new();
    for i in 0..rng.gen_range(1..=5) {
        let t = random_transition(&mut rng, i);
        maps.entry(t.map.clone()).or_default().push(t);
    }
    let rules = if rng.gen_bool(0.5) {
        let s = Term::Variable(var("s"));
        vec![BackwardRule::new(
            Pattern::triples(vec![TriplePattern::new(s.clone(), sym(DERIVED), st("ex:on"))]),
            Pattern::triples(vec![TriplePattern::new(s, sym(pick(&mut rng, &LABEL_PREDICATES)), st(pick(&mut rng, &LABELS)))]),
        )]
    } else {
        Vec::new()
    };
    let prefixes = [("ex".to_string(), "http://example.org/gen#".to_string())].into_iter().collect();
    ScenarioDocument {
        prefixes,
        initial_state,
        maps: maps.into_iter().map(|(id, transitions)| MapDefinition { id, transitions }).collect(),
        rules,
        goals: vec![random_goal(&mut rng)],
    }
}

fn pattern_vars(triples: &[TriplePattern]) -> Vec<Var> {
    let set: BTreeSet<Var> = triples.iter().flat_map(|t| t.vars().cloned()).collect();
    set.into_iter().collect()
}

fn ground_all(triples: &[TriplePattern], b: &Binding) -> Option<Vec<Fact>> {
    let resolve = |t: &Term| match t {
        Term::Variable(v) => b.get(v).cloned(),
        t => Some(t.clone()),
    };
    triples
        .iter()
        .map(|t| Fact::new(resolve(&t.subject)?, t.predicate.clone(), resolve(&t.object)?).ok())
        .collect()
}

/// Runs guards in order over a complete assignment of the triple variables.
fn guards_hold(guards: &[BuiltinCall], mut b: Binding) -> Result<Option<Binding>, Error> {
    for g in guards {
        match eval(g, &b)? {
            GuardOutcome::Holds(true) => {}
            GuardOutcome::Holds(false) => return Ok(None),
            GuardOutcome::Value(v, n) => match b.get(&v) {
                Some(Term::Number(existing)) if (existing.value() - n.value()).abs() <= 1e-9 => {}
                Some(_) => return Ok(None),
                None => {
                    b.insert(v, Term::Number(n));
                }
            },
        }
    }
    Ok(Some(b))
}

fn assignments(vars: &[Var], domain: &[Term], seed: &Binding) -> Vec<Binding> {
    let mut out = vec![seed.clone()];
    for v in vars {
        if seed.get(v).is_some() {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|b| {
                domain.iter().map(move |t| {
                    let mut next = b.clone();
                    next.insert(v.clone(), t.clone());
                    next
                })
            })
            .collect();
    }
    out
}

fn domain_of(facts: &FactSet) -> Vec<Term> {
    let set: BTreeSet<Term> = facts.iter().flat_map(|f| [f.subject().clone(), f.object().clone()]).collect();
    set.into_iter().collect()
}

/// Every binding of `pattern` over `facts`, found by trying all assignments
/// of its triple variables to terms occurring in `facts`.
pub fn brute_force_match(pattern: &Pattern, facts: &FactSet) -> Result<Vec<Binding>, Error> {
    let domain = domain_of(facts);
    let mut out = BTreeSet::new();
    for b in assignments(&pattern_vars(&pattern.triples), &domain, &Binding::new()) {
        let Some(ground) = ground_all(&pattern.triples, &b) else { continue };
        if ground.iter().all(|f| facts.contains(f)) {
            if let Some(full) = guards_hold(&pattern.guards, b)? {
                out.insert(full);
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Applicable bindings by exhaustive assignment: `from` against asserted
/// facts, `condition` against asserted plus derived facts.
pub fn brute_force_bindings(state: &WorldState, t: &TransitionDescription) -> Result<Vec<Binding>, Error> {
    let all = state.all_facts();
    let domain = domain_of(&all);
    let mut all_triples = t.from.triples.clone();
    all_triples.extend(t.condition.triples.iter().cloned());
    let vars = pattern_vars(&all_triples);
    let mut out = BTreeSet::new();
    for b in assignments(&vars, &domain, &Binding::new()) {
        let (Some(from), Some(cond)) = (ground_all(&t.from.triples, &b), ground_all(&t.condition.triples, &b)) else {
            continue;
        };
        if !from.iter().all(|f| state.base().contains(f)) || !cond.iter().all(|f| all.contains(f)) {
            continue;
        }
        if let Some(full) = guards_hold(&t.condition.guards, b)? {
            out.insert(full);
        }
    }
    Ok(out.into_iter().collect())
}

/// One step of an enumerated sequence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleStep {
    pub map: Symbol,
    pub action: Symbol,
    pub binding: Binding,
}

fn next_base(base: &FactSet, t: &TransitionDescription, b: &Binding) -> FactSet {
    let from: FactSet = ground_all(&t.from.triples, b).expect("from grounds").into_iter().collect();
    let mut out = base.difference(&from);
    out.extend(ground_all(&t.to.triples, b).expect("to grounds"));
    out
}

fn fits(steps: &[OracleStep], transitions: &[&TransitionDescription], goal: &Goal) -> bool {
    let (mut secs, mut cost, mut belief, mut comfort) = (0u64, 0.0, 1.0, 1.0);
    for s in steps {
        let t = transitions.iter().find(|t| t.map == s.map && t.action == s.action).expect("known step");
        secs += t.duration.as_secs();
        cost += t.cost.value();
        belief *= t.belief.value();
        comfort *= t.comfort.value();
    }
    secs <= goal.max_duration.as_secs()
        && cost <= goal.max_cost.value() + 1e-9
        && belief >= goal.min_belief.value() - 1e-9
        && comfort >= goal.min_comfort.value() - 1e-9
}

/// Enumerates every step sequence of length at most `max_depth` and keeps
/// those that end in a goal state, within the goal's limits, without passing
/// through an earlier goal state and without revisiting an asserted state.
pub fn brute_force_paths(
    initial: &WorldState,
    goal: &Goal,
    maps: &[MapDefinition],
    max_depth: usize,
) -> Result<BTreeSet<Vec<OracleStep>>, Error> {
    let transitions: Vec<&TransitionDescription> = maps.iter().flat_map(|m| &m.transitions).collect();
    let mut results = BTreeSet::new();
    // (state, steps, states along the sequence)
    let mut frontier = vec![(initial.clone(), Vec::<OracleStep>::new(), vec![initial.base().clone()])];
    for depth in 0..=max_depth {
        let mut next_frontier = Vec::new();
        for (state, steps, seen) in frontier {
            if !brute_force_match(&goal.target, &state.all_facts())?.is_empty() {
                // Terminal whether or not it fits the limits.
                if fits(&steps, &transitions, goal) {
                    results.insert(steps);
                }
                continue;
            }
            if depth == max_depth {
                continue;
            }
            for t in &transitions {
                for b in brute_force_bindings(&state, t)? {
                    let base = next_base(state.base(), t, &b);
                    if seen.contains(&base) {
                        continue;
                    }
                    let mut steps2 = steps.clone();
                    steps2.push(OracleStep { map: t.map.clone(), action: t.action.clone(), binding: b });
                    let mut seen2 = seen.clone();
                    seen2.push(base.clone());
                    next_frontier.push((WorldState::new(base, state.rules().clone())?, steps2, seen2));
                }
            }
        }
        frontier = next_frontier;
    }
    Ok(results)
}

/// Pseudo-random fact set drawn from the generator vocabulary.
pub fn random_facts(seed: u64, count: usize) -> FactSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_fact(&mut rng)).collect()
}
