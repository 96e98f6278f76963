//! Weighted state transitions: applicability, the atomic and two-phase
//! application rules, and timeline scheduling.
//!
//! A transition retracts its grounded `from` facts, keeps whatever its
//! `condition` matched, and asserts its grounded `to` facts. In two-phase
//! execution the `during` facts hold between start and end.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fact::{match_pattern, substitute, Binding, FactSet, Pattern};
use crate::kb::WorldState;
use crate::term::{DayTimeDuration, Number, Symbol, Term, Timestamp};

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDescription {
    pub map: Symbol,
    pub action: Symbol,
    pub from: Pattern,
    pub during: Pattern,
    pub to: Pattern,
    pub condition: Pattern,
    pub duration: DayTimeDuration,
    pub cost: Number,
    pub belief: Number,
    pub comfort: Number,
}

impl TransitionDescription {
    pub fn weights(&self) -> Weights {
        Weights { duration: self.duration, cost: self.cost, belief: self.belief, comfort: self.comfort }
    }

    /// Grounds the fact sets of this transition under `binding`, with the
    /// step placed at the timeline origin.
    pub fn ground(&self, binding: &Binding) -> Result<GroundedStep, Error> {
        Ok(GroundedStep {
            map: self.map.clone(),
            action: self.action.clone(),
            binding: binding.clone(),
            retracts_at_start: substitute(&self.from, binding)?,
            asserts_during: substitute(&self.during, binding)?,
            asserts_at_end: substitute(&self.to, binding)?,
            duration: self.duration,
            cost: self.cost,
            belief: self.belief,
            comfort: self.comfort,
            start: Timestamp(0),
            end: Timestamp(0).after(self.duration),
        })
    }
}

/// The four weights of a step or the aggregate of a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub duration: DayTimeDuration,
    pub cost: Number,
    pub belief: Number,
    pub comfort: Number,
}

/// A transition instantiated under one binding, optionally placed on a
/// timeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroundedStep {
    pub map: Symbol,
    pub action: Symbol,
    pub binding: Binding,
    pub retracts_at_start: FactSet,
    pub asserts_during: FactSet,
    pub asserts_at_end: FactSet,
    pub duration: DayTimeDuration,
    pub cost: Number,
    pub belief: Number,
    pub comfort: Number,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl GroundedStep {
    pub fn weights(&self) -> Weights {
        Weights { duration: self.duration, cost: self.cost, belief: self.belief, comfort: self.comfort }
    }
}

/// Bindings under which `t` may fire: `from` matched against asserted facts
/// only, `condition` against asserted and derived facts.
pub fn applicable(state: &WorldState, t: &TransitionDescription) -> Result<Vec<Binding>, Error> {
    let mut out = BTreeSet::new();
    for from_binding in match_pattern(&t.from, state.base(), &Binding::new())? {
        out.extend(state.query_seeded(&t.condition, &from_binding)?);
    }
    Ok(out.into_iter().collect())
}

/// Whether `binding` is one of the bindings [`applicable`] would return.
pub fn is_applicable(state: &WorldState, t: &TransitionDescription, binding: &Binding) -> Result<bool, Error> {
    if !match_pattern(&t.from, state.base(), binding)?.iter().any(|b| b == binding) {
        return Ok(false);
    }
    Ok(state.query_seeded(&t.condition, binding)?.iter().any(|b| b == binding))
}

fn require_applicable(state: &WorldState, t: &TransitionDescription, b: &Binding) -> Result<(), Error> {
    if is_applicable(state, t, b)? {
        Ok(())
    } else {
        Err(Error::NotApplicable { action: t.action.to_string() })
    }
}

/// `base' = (base \ from) ∪ to`, in one event.
pub fn apply_atomic(state: &WorldState, t: &TransitionDescription, b: &Binding) -> Result<WorldState, Error> {
    require_applicable(state, t, b)?;
    state.with_base(successor_base(state, t, b)?)
}

/// The base set [`apply_atomic`] would produce, without the applicability
/// check.
pub fn successor_base(state: &WorldState, t: &TransitionDescription, b: &Binding) -> Result<FactSet, Error> {
    let mut base = state.base().difference(&substitute(&t.from, b)?);
    base.extend(substitute(&t.to, b)?);
    Ok(base)
}

/// Start of a two-phase step: retract `from`, assert `during`.
pub fn apply_start(state: &WorldState, t: &TransitionDescription, b: &Binding) -> Result<WorldState, Error> {
    require_applicable(state, t, b)?;
    let mut base = state.base().difference(&substitute(&t.from, b)?);
    base.extend(substitute(&t.during, b)?);
    state.with_base(base)
}

/// End of a two-phase step: retract `during`, assert `to`.
pub fn apply_end(state: &WorldState, t: &TransitionDescription, b: &Binding) -> Result<WorldState, Error> {
    let during = substitute(&t.during, b)?;
    if !during.is_subset(state.base()) {
        return Err(Error::NotInTransition { action: t.action.to_string() });
    }
    let mut base = state.base().difference(&during);
    base.extend(substitute(&t.to, b)?);
    state.with_base(base)
}

/// Finds the binding to use when replaying a planned step against a state
/// that may have drifted from the plan.
///
/// The planned binding wins if it still applies. Otherwise the first
/// applicable binding that agrees with the plan on every non-numeric value
/// (the entities involved) is used, so re-measured quantities flow through.
pub fn rebind(state: &WorldState, t: &TransitionDescription, planned: &Binding) -> Result<Option<Binding>, Error> {
    if is_applicable(state, t, planned)? {
        return Ok(Some(planned.clone()));
    }
    let identity: Binding = planned
        .iter()
        .filter(|(_, v)| !matches!(v, Term::Number(_) | Term::Duration(_)))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let candidates = applicable(state, t)?;
    Ok(candidates.into_iter().find(|b| identity.iter().all(|(k, v)| b.get(k) == Some(v))))
}

/// Places steps back to back starting at `epoch`.
pub fn schedule_steps(steps: &[GroundedStep], epoch: Timestamp) -> Vec<GroundedStep> {
    let mut cursor = epoch;
    steps
        .iter()
        .map(|step| {
            let mut s = step.clone();
            s.start = cursor;
            s.end = cursor.after(s.duration);
            cursor = s.end;
            s
        })
        .collect()
}
