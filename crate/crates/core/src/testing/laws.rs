//! Semantic laws of transitions and saturation as plain checks, so both the
//! proptest suites and the acceptance runner can drive them. Each returns a
//! description of the first counterexample.

use std::collections::HashSet;

use crate::document::ScenarioDocument;
use crate::engine::{applicable, apply_atomic, apply_end, apply_start, TransitionDescription};
use crate::fact::{match_pattern, substitute, Binding, Fact, FactSet};
use crate::kb::{saturate, BackwardRule, WorldState};

pub type Law = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn world(doc: &ScenarioDocument) -> Result<WorldState, String> {
    WorldState::new(doc.initial_state.clone(), doc.rules.clone().into()).map_err(|e| e.to_string())
}

type Firing<'a> = (&'a TransitionDescription, Binding);

/// Every applicable (transition, binding) pair of the document's initial state.
fn firings(doc: &ScenarioDocument) -> Result<(WorldState, Vec<Firing<'_>>), String> {
    let state = world(doc)?;
    let mut out = Vec::new();
    for t in doc.transitions() {
        for b in applicable(&state, t).map_err(|e| e.to_string())? {
            out.push((t, b));
        }
    }
    Ok((state, out))
}

fn ground(p: &crate::fact::Pattern, b: &Binding) -> Result<FactSet, String> {
    substitute(p, b).map_err(|e| e.to_string())
}

/// Facts outside `from`, `to` and `during` survive a step, and the new base
/// is exactly `(base - from) + to`.
pub fn frame(doc: &ScenarioDocument) -> Law {
    let (state, firings) = firings(doc)?;
    for (t, b) in firings {
        let from = ground(&t.from, &b)?;
        let to = ground(&t.to, &b)?;
        let during = ground(&t.during, &b)?;
        let next = apply_atomic(&state, t, &b).map_err(|e| e.to_string())?;
        for f in state.base().iter() {
            let touched = from.contains(f) || to.contains(f) || during.contains(f);
            ensure!(touched || next.base().contains(f), "{} {b}: untouched fact {f} disappeared", t.action);
        }
        let mut expected = state.base().difference(&from);
        expected.extend(to.iter().cloned());
        ensure!(next.base() == &expected, "{} {b}: base is not (base - from) + to", t.action);
        ensure!(next.version() == state.version() + 1, "{} {b}: version did not advance by one", t.action);
    }
    Ok(())
}

/// Asserted facts matched by the condition are still there after the step,
/// unless the step consumes them through `from`.
pub fn condition_persistence(doc: &ScenarioDocument) -> Law {
    let (state, firings) = firings(doc)?;
    for (t, b) in firings {
        let from = ground(&t.from, &b)?;
        let next = apply_atomic(&state, t, &b).map_err(|e| e.to_string())?;
        for f in ground(&t.condition, &b)? {
            if state.base().contains(&f) && !from.contains(&f) {
                ensure!(next.base().contains(&f), "{} {b}: condition fact {f} was consumed", t.action);
            }
        }
    }
    Ok(())
}

/// Along any sequence of steps, no fact is listed twice and derived facts
/// never duplicate asserted ones. `choices` picks the transition and binding
/// at each step, modulo what is available.
pub fn single_occurrence(doc: &ScenarioDocument, choices: &[usize]) -> Law {
    let mut state = world(doc)?;
    let transitions: Vec<_> = doc.transitions().collect();
    if transitions.is_empty() {
        return Ok(());
    }
    for &c in choices {
        let t = transitions[c % transitions.len()];
        let bs = applicable(&state, t).map_err(|e| e.to_string())?;
        if bs.is_empty() {
            continue;
        }
        state = apply_atomic(&state, t, &bs[c % bs.len()]).map_err(|e| e.to_string())?;
        let listed: Vec<&Fact> = state.base().iter().collect();
        let unique: HashSet<&Fact> = listed.iter().copied().collect();
        ensure!(listed.len() == unique.len(), "after {}: a fact occurs twice", t.action);
        ensure!(
            state.derived().iter().all(|f| !state.base().contains(f)),
            "after {}: a derived fact repeats an asserted one",
            t.action
        );
    }
    Ok(())
}

/// Starting then ending a step gives the atomic result whenever its
/// in-progress facts were not asserted beforehand.
pub fn phase_composition(doc: &ScenarioDocument) -> Law {
    let (state, firings) = firings(doc)?;
    for (t, b) in firings {
        let during = ground(&t.during, &b)?;
        if during.iter().any(|f| state.base().contains(f)) {
            continue;
        }
        let atomic = apply_atomic(&state, t, &b).map_err(|e| e.to_string())?;
        let started = apply_start(&state, t, &b).map_err(|e| e.to_string())?;
        let ended = apply_end(&started, t, &b).map_err(|e| e.to_string())?;
        ensure!(ended.base() == atomic.base(), "{} {b}: start then end differs from atomic", t.action);
    }
    Ok(())
}

/// Fixpoint by brute force: re-match every rule against everything until
/// nothing new appears. Returns only the derived part.
pub fn naive_closure(base: &FactSet, rules: &[BackwardRule]) -> FactSet {
    let mut all = base.clone();
    loop {
        let mut grew = false;
        for r in rules {
            for b in match_pattern(&r.body, &all, &Binding::new()).expect("rule bodies evaluate") {
                for f in substitute(&r.head, &b).expect("safe rules ground") {
                    grew |= all.insert(f);
                }
            }
        }
        if !grew {
            return all.difference(base);
        }
    }
}

fn closure(base: &FactSet, rules: &[BackwardRule]) -> Result<FactSet, String> {
    saturate(base, rules).map_err(|e| e.to_string())
}

pub fn saturation_matches_naive(base: &FactSet, rules: &[BackwardRule]) -> Law {
    ensure!(closure(base, rules)? == naive_closure(base, rules), "semi-naive and naive closures differ");
    Ok(())
}

pub fn saturation_idempotent(base: &FactSet, rules: &[BackwardRule]) -> Law {
    let closed = base.union(&closure(base, rules)?);
    ensure!(closure(&closed, rules)?.is_empty(), "saturating a saturated set derived more");
    Ok(())
}

pub fn saturation_monotone(small: &FactSet, extra: &FactSet, rules: &[BackwardRule]) -> Law {
    let bigger = small.union(extra);
    let lhs = small.union(&closure(small, rules)?);
    let rhs = bigger.union(&closure(&bigger, rules)?);
    ensure!(lhs.is_subset(&rhs), "adding facts lost a consequence");
    Ok(())
}

pub fn saturation_order_independent(base: &FactSet, rules: &[BackwardRule]) -> Law {
    let reference = closure(base, rules)?;
    let mut reversed = rules.to_vec();
    reversed.reverse();
    ensure!(closure(base, &reversed)? == reference, "reversing the rules changed the closure");
    let mut rotated = rules.to_vec();
    if !rotated.is_empty() {
        rotated.rotate_left(1);
    }
    ensure!(closure(base, &rotated)? == reference, "rotating the rules changed the closure");
    Ok(())
}
