//! Pathways in flight: validation against fresh state, merging concurrent
//! pathways onto one timeline, conflict prediction, and step advancement.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::document::{Goal, MapDefinition};
use crate::engine::{apply_end, apply_start, rebind, schedule_steps, successor_base, GroundedStep, TransitionDescription};
use crate::error::Error;
use crate::fact::{match_pattern, substitute, Binding, Fact, FactSet, Pattern, TriplePattern};
use crate::kb::{BackwardRule, WorldState};
use crate::planner::{find_transition, Path};
use crate::term::{Symbol, Term, Timestamp, Var};

/// Predicate the engine treats as an explicit conflict signal.
pub const ALERT_PREDICATE: &str = "gps:alert";

/// `?p gps:alert ?g`
pub fn alert_pattern() -> Pattern {
    Pattern::triples(vec![TriplePattern::new(
        Term::Variable(Var::new("p").unwrap()),
        Symbol::new(ALERT_PREDICATE).unwrap(),
        Term::Variable(Var::new("g").unwrap()),
    )])
}

/// A selected path being carried out from `epoch`. Steps before `cursor`
/// have been executed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathwayInstance {
    pub id: String,
    pub goal: Goal,
    pub path: Path,
    pub epoch: Timestamp,
    pub cursor: usize,
}

impl PathwayInstance {
    /// Schedules the path's steps back to back from `epoch`.
    pub fn new(id: impl Into<String>, goal: Goal, mut path: Path, epoch: Timestamp) -> Self {
        path.steps = schedule_steps(&path.steps, epoch);
        PathwayInstance { id: id.into(), goal, path, epoch, cursor: 0 }
    }

    pub fn remaining(&self) -> &[GroundedStep] {
        &self.path.steps[self.cursor.min(self.path.steps.len())..]
    }

    pub fn is_complete(&self) -> bool {
        self.cursor >= self.path.steps.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FailureReason {
    PreconditionFailed,
    GoalUnmatched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Verdict {
    #[serde(rename_all = "camelCase")]
    Reachable { final_state_hash: String, reported: Binding },
    #[serde(rename_all = "camelCase")]
    NotReachable {
        step: Option<usize>,
        action: Option<Symbol>,
        reason: FailureReason,
        unmatched: Pattern,
    },
}

impl Verdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Verdict::Reachable { .. })
    }
}

fn transition_for<'a>(maps: &'a [MapDefinition], step: &GroundedStep) -> Result<&'a TransitionDescription, Error> {
    find_transition(maps, &step.map, &step.action).ok_or_else(|| Error::UnknownTransition {
        map: step.map.to_string(),
        action: step.action.to_string(),
    })
}

/// The part of a transition that fails to match: `from` if no asserted facts
/// fit it, otherwise `condition`.
fn failing_part(state: &WorldState, t: &TransitionDescription, planned: &Binding) -> Result<Pattern, Error> {
    let identity: Binding = planned
        .iter()
        .filter(|(_, v)| matches!(v, Term::Symbol(_) | Term::Text(_)))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if match_pattern(&t.from, state.base(), &identity)?.is_empty() {
        Ok(t.from.clone())
    } else {
        Ok(t.condition.clone())
    }
}

/// Replays the unexecuted steps of `instance` atomically from `current` and
/// checks the goal. The live state is never touched.
pub fn validate_path(current: &WorldState, instance: &PathwayInstance, maps: &[MapDefinition]) -> Result<Verdict, Error> {
    let mut state = current.clone();
    for (offset, step) in instance.remaining().iter().enumerate() {
        let t = transition_for(maps, step)?;
        match rebind(&state, t, &step.binding)? {
            Some(b) => state = state.with_base(successor_base(&state, t, &b)?)?,
            None => {
                return Ok(Verdict::NotReachable {
                    step: Some(instance.cursor + offset),
                    action: Some(step.action.clone()),
                    reason: FailureReason::PreconditionFailed,
                    unmatched: failing_part(&state, t, &step.binding)?,
                })
            }
        }
    }
    match state.query(&instance.goal.target)?.first() {
        Some(b) => Ok(Verdict::Reachable { final_state_hash: state.hash(), reported: b.restrict(&instance.goal.report) }),
        None => Ok(Verdict::NotReachable {
            step: None,
            action: None,
            reason: FailureReason::GoalUnmatched,
            unmatched: instance.goal.target.clone(),
        }),
    }
}

/// Identifies a step inside a pathway instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRef {
    pub instance: String,
    pub step: usize,
    pub action: Symbol,
    pub start: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MergedStep {
    pub instance: String,
    pub step_index: usize,
    pub step: GroundedStep,
}

impl MergedStep {
    pub fn step_ref(&self) -> StepRef {
        StepRef {
            instance: self.instance.clone(),
            step: self.step_index,
            action: self.step.action.clone(),
            start: self.step.start,
        }
    }
}

/// Unexecuted steps of all instances ordered by start instant; ties go to
/// the earlier instance in `instances`, then to the lower step index.
pub fn merge_schedules(instances: &[PathwayInstance]) -> Vec<MergedStep> {
    let mut keyed: Vec<((Timestamp, usize, usize), MergedStep)> = instances
        .iter()
        .enumerate()
        .flat_map(|(order, inst)| {
            inst.path.steps.iter().enumerate().skip(inst.cursor).map(move |(i, step)| {
                (
                    (step.start, order, i),
                    MergedStep { instance: inst.id.clone(), step_index: i, step: step.clone() },
                )
            })
        })
        .collect();
    keyed.sort_by_key(|k| k.0);
    keyed.into_iter().map(|(_, m)| m).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConflictKind {
    Explicit,
    Implicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Evidence {
    /// Alert facts derived by background rules.
    #[serde(rename_all = "camelCase")]
    Alerts { facts: FactSet },
    /// A goal that the merged execution no longer reaches.
    #[serde(rename_all = "camelCase")]
    Goal {
        goal: Symbol,
        instance: String,
        blocked_step: Option<StepRef>,
        unmatched: Option<Pattern>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConflictReport {
    pub kind: ConflictKind,
    pub at_step: Option<StepRef>,
    pub evidence: Evidence,
    pub state_version: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    End,
    Start,
}

/// Simulates the merged schedule event by event (start and end of every
/// step), saturating after each event. New alert facts become explicit
/// conflicts; blocked steps and unreached goals become implicit conflicts.
/// Blocked steps are skipped and the simulation carries on.
pub fn detect_conflicts(
    current: &WorldState,
    instances: &[PathwayInstance],
    maps: &[MapDefinition],
    rules: Arc<[BackwardRule]>,
) -> Result<Vec<ConflictReport>, Error> {
    let merged = merge_schedules(instances);
    let mut state = WorldState::at_version(current.base().clone(), rules, current.version())?;

    let mut events: Vec<(Timestamp, Phase, usize)> = Vec::new();
    for (m, ms) in merged.iter().enumerate() {
        events.push((ms.step.start, Phase::Start, m));
        if ms.step.duration.as_secs() > 0 {
            events.push((ms.step.end, Phase::End, m));
        }
    }
    events.sort();

    let alerts = alert_pattern();
    let alert_facts = |s: &WorldState| -> Result<FactSet, Error> {
        let mut out = FactSet::new();
        for b in s.query(&alerts)? {
            out.extend(substitute(&alerts, &b)?);
        }
        Ok(out)
    };
    let mut seen_alerts: HashSet<Fact> = alert_facts(&state)?.into_iter().collect();
    let mut reports = Vec::new();
    let mut in_progress: HashMap<usize, Binding> = HashMap::new();
    let mut blocked: HashMap<String, (StepRef, u64)> = HashMap::new();

    for (_, phase, m) in events {
        let ms = &merged[m];
        let t = transition_for(maps, &ms.step)?;
        let outcome = match phase {
            Phase::Start => match rebind(&state, t, &ms.step.binding)? {
                Some(b) if ms.step.duration.as_secs() == 0 => Some(state.with_base(successor_base(&state, t, &b)?)?),
                Some(b) => {
                    let next = apply_start(&state, t, &b)?;
                    in_progress.insert(m, b);
                    Some(next)
                }
                None => None,
            },
            Phase::End => match in_progress.remove(&m) {
                Some(b) => match apply_end(&state, t, &b) {
                    Ok(next) => Some(next),
                    Err(Error::NotInTransition { .. }) => None,
                    Err(e) => return Err(e),
                },
                // Its start was blocked and already recorded.
                None => continue,
            },
        };
        match outcome {
            Some(next) => {
                state = next;
                let fresh: Vec<Fact> = alert_facts(&state)?.into_iter().filter(|f| !seen_alerts.contains(f)).collect();
                for fact in fresh {
                    seen_alerts.insert(fact.clone());
                    reports.push(ConflictReport {
                        kind: ConflictKind::Explicit,
                        at_step: Some(ms.step_ref()),
                        evidence: Evidence::Alerts { facts: [fact].into_iter().collect() },
                        state_version: state.version(),
                    });
                }
            }
            None => {
                blocked.entry(ms.instance.clone()).or_insert_with(|| (ms.step_ref(), state.version()));
            }
        }
    }

    for inst in instances {
        if let Some((step, version)) = blocked.remove(&inst.id) {
            reports.push(ConflictReport {
                kind: ConflictKind::Implicit,
                at_step: Some(step.clone()),
                evidence: Evidence::Goal {
                    goal: inst.goal.id.clone(),
                    instance: inst.id.clone(),
                    blocked_step: Some(step),
                    unmatched: None,
                },
                state_version: version,
            });
        } else if state.query(&inst.goal.target)?.is_empty() {
            reports.push(ConflictReport {
                kind: ConflictKind::Implicit,
                at_step: None,
                evidence: Evidence::Goal {
                    goal: inst.goal.id.clone(),
                    instance: inst.id.clone(),
                    blocked_step: None,
                    unmatched: Some(inst.goal.target.clone()),
                },
                state_version: state.version(),
            });
        }
    }
    Ok(reports)
}

/// Marks the next step executed and applies it to the live state, then lets
/// `observed` facts replace expected ones: every asserted fact sharing a
/// (subject, predicate) pair with an observed fact is dropped first.
pub fn advance(
    instance: &PathwayInstance,
    observed: &FactSet,
    live: &WorldState,
    maps: &[MapDefinition],
) -> Result<(PathwayInstance, WorldState), Error> {
    let step = instance.path.steps.get(instance.cursor).ok_or(Error::CursorExhausted)?;
    let t = transition_for(maps, step)?;
    let b = rebind(live, t, &step.binding)?.ok_or_else(|| Error::NotApplicable { action: t.action.to_string() })?;
    let mut base = successor_base(live, t, &b)?;
    let overridden: BTreeSet<(&Term, &Symbol)> = observed.iter().map(|f| (f.subject(), f.predicate())).collect();
    base.retain(|f| !overridden.contains(&(f.subject(), f.predicate())));
    base.extend(observed.iter().cloned());

    let mut next = instance.clone();
    next.cursor += 1;
    Ok((next, live.with_base(base)?))
}
