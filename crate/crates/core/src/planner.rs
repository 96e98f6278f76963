//! Forward-chaining path search toward a goal under weight limits.

use serde::{Deserialize, Serialize};

use crate::document::{Goal, MapDefinition};
use crate::engine::{applicable, is_applicable, successor_base, GroundedStep, TransitionDescription, Weights};
use crate::error::Error;
use crate::fact::{substitute, Binding, FactSet};
use crate::kb::WorldState;
use crate::term::{DayTimeDuration, Number, Symbol, Timestamp, NUMERIC_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SearchOptions {
    pub max_depth: usize,
    pub max_paths: usize,
    /// Cut branches whose prefix already breaks a limit. Turning this off
    /// changes only how much of the tree is visited, never the result.
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { max_depth: 16, max_paths: 64, prune: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Search nodes visited, including the root.
    pub expanded: usize,
}

/// A goal-reaching sequence of grounded steps with its aggregate weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Path {
    pub steps: Vec<GroundedStep>,
    pub duration: DayTimeDuration,
    pub cost: Number,
    pub belief: Number,
    pub comfort: Number,
    /// Values of the goal's report variables in the final state.
    pub reported: Binding,
    pub final_state_hash: String,
}

impl Path {
    pub fn actions(&self) -> Vec<&Symbol> {
        self.steps.iter().map(|s| &s.action).collect()
    }

    pub fn weights(&self) -> Weights {
        Weights { duration: self.duration, cost: self.cost, belief: self.belief, comfort: self.comfort }
    }
}

fn combine(acc: Weights, step: Weights) -> Weights {
    Weights {
        duration: acc.duration.checked_add(step.duration).unwrap_or(DayTimeDuration::from_secs(u64::MAX)),
        cost: Number::new(acc.cost.value() + step.cost.value()).unwrap_or(acc.cost),
        belief: Number::new(acc.belief.value() * step.belief.value()).unwrap_or(acc.belief),
        comfort: Number::new(acc.comfort.value() * step.comfort.value()).unwrap_or(acc.comfort),
    }
}

fn identity() -> Weights {
    let one = Number::new(1.0).unwrap();
    Weights { duration: DayTimeDuration::ZERO, cost: Number::new(0.0).unwrap(), belief: one, comfort: one }
}

/// Sums duration and cost, multiplies belief and comfort. The empty sequence
/// aggregates to `(P0D, 0, 1, 1)`.
pub fn aggregate(steps: &[GroundedStep]) -> Weights {
    steps.iter().map(GroundedStep::weights).fold(identity(), combine)
}

/// Inclusive limit check, with [`NUMERIC_TOLERANCE`] slack on the decimal
/// limits.
pub fn within_limits(w: &Weights, goal: &Goal) -> bool {
    w.duration <= goal.max_duration
        && w.cost.value() <= goal.max_cost.value() + NUMERIC_TOLERANCE
        && w.belief.value() >= goal.min_belief.value() - NUMERIC_TOLERANCE
        && w.comfort.value() >= goal.min_comfort.value() - NUMERIC_TOLERANCE
}

pub fn find_transition<'a>(maps: &'a [MapDefinition], map: &Symbol, action: &Symbol) -> Option<&'a TransitionDescription> {
    maps.iter().filter(|m| &m.id == map).flat_map(|m| &m.transitions).find(|t| &t.action == action)
}

/// All transitions in expansion order: by map id, then action id.
pub(crate) fn ordered_transitions(maps: &[MapDefinition]) -> Vec<&TransitionDescription> {
    let mut all: Vec<&TransitionDescription> = maps.iter().flat_map(|m| &m.transitions).collect();
    all.sort_by(|a, b| (&a.map, &a.action).cmp(&(&b.map, &b.action)));
    all
}

pub fn find_paths(
    state: &WorldState,
    goal: &Goal,
    maps: &[MapDefinition],
    options: SearchOptions,
) -> Result<Vec<Path>, Error> {
    find_paths_with_stats(state, goal, maps, options).map(|(paths, _)| paths)
}

/// Depth-first search from `state`. A branch stops as soon as the goal
/// matches, so only minimal solutions are reported, and a state already on
/// the current branch is never expanded again.
pub fn find_paths_with_stats(
    state: &WorldState,
    goal: &Goal,
    maps: &[MapDefinition],
    options: SearchOptions,
) -> Result<(Vec<Path>, SearchStats), Error> {
    let mut search = Search {
        goal,
        transitions: ordered_transitions(maps),
        options,
        found: Vec::new(),
        stats: SearchStats::default(),
    };
    let mut steps = Vec::new();
    let mut branch = vec![state.base().clone()];
    search.visit(state, &mut steps, identity(), &mut branch)?;

    let mut found = search.found;
    found.sort_by(|a, b| {
        a.cost
            .value()
            .total_cmp(&b.cost.value())
            .then(a.duration.cmp(&b.duration))
            .then_with(|| action_key(a).cmp(&action_key(b)))
            .then_with(|| binding_key(a).cmp(&binding_key(b)))
    });
    found.truncate(options.max_paths);
    Ok((found, search.stats))
}

fn action_key(p: &Path) -> String {
    p.steps.iter().map(|s| format!("{} {}", s.map, s.action)).collect::<Vec<_>>().join(",")
}

fn binding_key(p: &Path) -> String {
    p.steps.iter().map(|s| s.binding.to_string()).collect::<Vec<_>>().join(",")
}

struct Search<'a> {
    goal: &'a Goal,
    transitions: Vec<&'a TransitionDescription>,
    options: SearchOptions,
    found: Vec<Path>,
    stats: SearchStats,
}

impl Search<'_> {
    fn visit(
        &mut self,
        state: &WorldState,
        steps: &mut Vec<GroundedStep>,
        weights: Weights,
        branch: &mut Vec<FactSet>,
    ) -> Result<(), Error> {
        self.stats.expanded += 1;
        let targets = state.query(&self.goal.target)?;
        if let Some(first) = targets.first() {
            if within_limits(&weights, self.goal) {
                self.found.push(Path {
                    steps: crate::engine::schedule_steps(steps, Timestamp(0)),
                    duration: weights.duration,
                    cost: weights.cost,
                    belief: weights.belief,
                    comfort: weights.comfort,
                    reported: first.restrict(&self.goal.report),
                    final_state_hash: state.hash(),
                });
            }
            return Ok(());
        }
        if steps.len() >= self.options.max_depth {
            return Ok(());
        }

        let transitions = self.transitions.clone();
        for t in transitions {
            for b in applicable(state, t)? {
                let next_weights = combine(weights, t.weights());
                if self.options.prune && !within_limits(&next_weights, self.goal) {
                    continue;
                }
                let base = successor_base(state, t, &b)?;
                if branch.contains(&base) {
                    continue;
                }
                let next = state.with_base(base.clone())?;
                steps.push(t.ground(&b)?);
                branch.push(base);
                self.visit(&next, steps, next_weights, branch)?;
                branch.pop();
                steps.pop();
            }
        }
        Ok(())
    }
}

/// One replayed step of a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceEntry {
    pub step: usize,
    pub map: Symbol,
    pub action: Symbol,
    pub version_before: u64,
    pub retracted: FactSet,
    pub asserted: FactSet,
    pub binding: Binding,
    pub state_hash_after: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    pub final_state_hash: String,
}

impl Trace {
    /// Applies the recorded retractions and assertions to `initial`.
    pub fn replay(&self, initial: &FactSet) -> FactSet {
        self.entries.iter().fold(initial.clone(), |base, e| {
            let mut next = base.difference(&e.retracted);
            next.extend(e.asserted.iter().cloned());
            next
        })
    }
}

/// Re-executes `path` from `initial` with its recorded bindings.
pub fn explain(path: &Path, initial: &WorldState, maps: &[MapDefinition]) -> Result<Trace, Error> {
    let mut state = initial.clone();
    let mut entries = Vec::with_capacity(path.steps.len());
    for (i, step) in path.steps.iter().enumerate() {
        let mismatch = || Error::TraceMismatch { step: i, action: step.action.to_string() };
        let t = find_transition(maps, &step.map, &step.action).ok_or_else(mismatch)?;
        if !is_applicable(&state, t, &step.binding)? {
            return Err(mismatch());
        }
        let retracted = substitute(&t.from, &step.binding)?;
        let asserted = substitute(&t.to, &step.binding)?;
        let version_before = state.version();
        state = state.with_base(successor_base(&state, t, &step.binding)?)?;
        entries.push(TraceEntry {
            step: i,
            map: step.map.clone(),
            action: step.action.clone(),
            version_before,
            retracted,
            asserted,
            binding: step.binding.clone(),
            state_hash_after: state.hash(),
        });
    }
    Ok(Trace { entries, final_state_hash: state.hash() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact::Pattern;

    fn step(days: u64, cost: f64, belief: f64, comfort: f64) -> GroundedStep {
        GroundedStep {
            map: Symbol::new("ex:m").unwrap(),
            action: Symbol::new("ex:a").unwrap(),
            binding: Binding::new(),
            retracts_at_start: FactSet::new(),
            asserts_during: FactSet::new(),
            asserts_at_end: FactSet::new(),
            duration: DayTimeDuration::from_days(days),
            cost: Number::new(cost).unwrap(),
            belief: Number::new(belief).unwrap(),
            comfort: Number::new(comfort).unwrap(),
            start: Timestamp(0),
            end: Timestamp(0),
        }
    }

    #[test]
    fn aggregate_identities_and_fixture_values() {
        let w = aggregate(&[]);
        assert_eq!(w.duration, DayTimeDuration::ZERO);
        assert_eq!((w.cost.value(), w.belief.value(), w.comfort.value()), (0.0, 1.0, 1.0));

        let w = aggregate(&[step(50, 14147.0, 0.9, 0.4)]);
        assert_eq!(w.duration, DayTimeDuration::from_days(50));
        assert_eq!((w.cost.value(), w.belief.value(), w.comfort.value()), (14147.0, 0.9, 0.4));

        // Hand arithmetic: 50+14 days, 14147+20000, 0.9*0.95, 0.4*0.5.
        let w = aggregate(&[step(50, 14147.0, 0.9, 0.4), step(14, 20000.0, 0.95, 0.5)]);
        assert_eq!(w.duration, DayTimeDuration::from_days(64));
        assert_eq!(w.cost.value(), 34147.0);
        assert!((w.belief.value() - 0.855).abs() < 1e-9);
        assert!((w.comfort.value() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn limits_are_inclusive() {
        let goal = Goal {
            id: Symbol::new("ex:g").unwrap(),
            target: Pattern::default(),
            max_duration: DayTimeDuration::from_days(64),
            max_cost: Number::new(34147.0).unwrap(),
            min_belief: Number::new(0.855).unwrap(),
            min_comfort: Number::new(0.2).unwrap(),
            report: vec![],
        };
        let w = aggregate(&[step(50, 14147.0, 0.9, 0.4), step(14, 20000.0, 0.95, 0.5)]);
        assert!(within_limits(&w, &goal));
        let over = aggregate(&[step(50, 14147.0, 0.9, 0.4), step(15, 20000.0, 0.95, 0.5)]);
        assert!(!within_limits(&over, &goal));
    }
}
