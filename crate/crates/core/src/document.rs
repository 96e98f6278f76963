//! The scenario document: prefixes, initial state, maps of transitions,
//! background rules and goals, plus the structural validator shared by the
//! text and interchange loaders.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::builtin::BuiltinCall;
use crate::engine::TransitionDescription;
use crate::fact::{FactSet, Pattern, TriplePattern};
use crate::kb::BackwardRule;
use crate::term::{DayTimeDuration, Number, Symbol, Term, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct MapDefinition {
    pub id: Symbol,
    pub transitions: Vec<TransitionDescription>,
}

/// Target pattern plus the inclusive limit vector a path must respect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Goal {
    pub id: Symbol,
    pub target: Pattern,
    pub max_duration: DayTimeDuration,
    pub max_cost: Number,
    pub min_belief: Number,
    pub min_comfort: Number,
    #[serde(default)]
    pub report: Vec<Var>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioDocument {
    pub prefixes: BTreeMap<String, String>,
    pub initial_state: FactSet,
    pub maps: Vec<MapDefinition>,
    pub rules: Vec<BackwardRule>,
    pub goals: Vec<Goal>,
}

impl ScenarioDocument {
    pub fn goal(&self, id: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.id.as_str() == id)
    }

    pub fn transition(&self, map: &Symbol, action: &Symbol) -> Option<&TransitionDescription> {
        self.maps
            .iter()
            .filter(|m| &m.id == map)
            .flat_map(|m| m.transitions.iter())
            .find(|t| &t.action == action)
    }

    pub fn transitions(&self) -> impl Iterator<Item = &TransitionDescription> + '_ {
        self.maps.iter().flat_map(|m| m.transitions.iter())
    }
}

/// What kind of problem a diagnostic reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Syntax,
    UnknownPrefix,
    UnboundVariable,
    BadDuration,
    WeightOutOfRange,
    DuplicateId,
    EmptyMap,
    MisplacedGuard,
    BadBuiltin,
    Schema,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Syntax => "syntax",
            Category::UnknownPrefix => "unknown-prefix",
            Category::UnboundVariable => "unbound-variable",
            Category::BadDuration => "bad-duration",
            Category::WeightOutOfRange => "weight-out-of-range",
            Category::DuplicateId => "duplicate-id",
            Category::EmptyMap => "empty-map",
            Category::MisplacedGuard => "misplaced-guard",
            Category::BadBuiltin => "bad-builtin",
            Category::Schema => "schema",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One validation failure, located by its path inside the document
/// (e.g. `maps[0].transitions[1].belief`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub category: Category,
    pub message: String,
}

struct Checker<'a> {
    prefixes: &'a BTreeMap<String, String>,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn report(&mut self, path: impl Into<String>, category: Category, message: impl Into<String>) {
        self.out.push(Violation { path: path.into(), category, message: message.into() });
    }

    fn symbol(&mut self, path: &str, s: &Symbol) {
        if !self.prefixes.contains_key(s.prefix()) {
            self.report(path, Category::UnknownPrefix, format!("prefix `{}:` is not declared", s.prefix()));
        }
    }

    fn term(&mut self, path: &str, t: &Term) {
        if let Term::Symbol(s) = t {
            self.symbol(path, s);
        }
    }

    fn triple(&mut self, path: &str, t: &TriplePattern) {
        self.term(path, &t.subject);
        self.symbol(path, &t.predicate);
        self.term(path, &t.object);
    }

    fn guard(&mut self, path: &str, g: &BuiltinCall) {
        for a in &g.args {
            self.term(path, a);
        }
        if !g.is_well_formed() {
            let msg = if g.op.is_arithmetic() {
                format!("{} needs a result variable (`-> ?var`)", g.op.name())
            } else {
                format!("{} is a comparison and takes no result variable", g.op.name())
            };
            self.report(path, Category::BadBuiltin, msg);
        }
    }

    /// Prefixes, builtin shape and guard bindability for one pattern.
    fn pattern(&mut self, path: &str, p: &Pattern, seed: &BTreeSet<Var>, guards_allowed: bool) {
        for (k, t) in p.triples.iter().enumerate() {
            self.triple(&format!("{path}.triples[{k}]"), t);
        }
        for (k, g) in p.guards.iter().enumerate() {
            let gp = format!("{path}.guards[{k}]");
            if !guards_allowed {
                self.report(&gp, Category::MisplacedGuard, "guards are only allowed in conditions, rule bodies and goal targets");
            }
            self.guard(&gp, g);
        }
        if guards_allowed {
            if let Some((k, v)) = p.first_unbindable(seed) {
                self.report(
                    format!("{path}.guards[{k}]"),
                    Category::UnboundVariable,
                    format!("guard uses {v} before any triple or earlier guard binds it"),
                );
            }
        }
    }

    /// Every variable of `p`'s triples must be in `bound`.
    fn grounded_by(&mut self, path: &str, p: &Pattern, bound: &BTreeSet<Var>, what: &str) {
        for (k, t) in p.triples.iter().enumerate() {
            if let Some(v) = t.vars().find(|v| !bound.contains(*v)) {
                self.report(format!("{path}.triples[{k}]"), Category::UnboundVariable, format!("{v} is not bound by {what}"));
            }
        }
    }

    fn unit_interval(&mut self, path: &str, n: Number, what: &str) {
        if !(0.0..=1.0).contains(&n.value()) {
            self.report(path, Category::WeightOutOfRange, format!("{what} must be between 0 and 1, got {n}"));
        }
    }

    fn non_negative(&mut self, path: &str, n: Number, what: &str) {
        if n.value() < 0.0 {
            self.report(path, Category::WeightOutOfRange, format!("{what} must not be negative, got {n}"));
        }
    }
}

/// Checks every document invariant and returns all violations found.
pub fn validate(doc: &ScenarioDocument) -> Vec<Violation> {
    let mut c = Checker { prefixes: &doc.prefixes, out: Vec::new() };

    for (i, fact) in doc.initial_state.iter().enumerate() {
        let path = format!("initialState[{i}]");
        c.term(&path, fact.subject());
        c.symbol(&path, fact.predicate());
        c.term(&path, fact.object());
    }

    let mut map_ids = HashSet::new();
    for (i, map) in doc.maps.iter().enumerate() {
        let mp = format!("maps[{i}]");
        c.symbol(&format!("{mp}.id"), &map.id);
        if !map_ids.insert(&map.id) {
            c.report(format!("{mp}.id"), Category::DuplicateId, format!("map {} is defined twice", map.id));
        }
        if map.transitions.is_empty() {
            c.report(&mp, Category::EmptyMap, format!("map {} has no transitions", map.id));
        }
        let mut actions = HashSet::new();
        for (j, t) in map.transitions.iter().enumerate() {
            let tp = format!("{mp}.transitions[{j}]");
            c.symbol(&format!("{tp}.action"), &t.action);
            if !actions.insert(&t.action) {
                c.report(format!("{tp}.action"), Category::DuplicateId, format!("action {} appears twice in map {}", t.action, map.id));
            }
            let none = BTreeSet::new();
            c.pattern(&format!("{tp}.from"), &t.from, &none, false);
            c.pattern(&format!("{tp}.during"), &t.during, &none, false);
            c.pattern(&format!("{tp}.to"), &t.to, &none, false);
            let from_vars = t.from.bound_vars();
            c.pattern(&format!("{tp}.condition"), &t.condition, &from_vars, true);
            let mut bound = from_vars;
            bound.extend(t.condition.bound_vars());
            c.grounded_by(&format!("{tp}.during"), &t.during, &bound, "from or condition");
            c.grounded_by(&format!("{tp}.to"), &t.to, &bound, "from or condition");
            c.non_negative(&format!("{tp}.cost"), t.cost, "cost");
            c.unit_interval(&format!("{tp}.belief"), t.belief, "belief");
            c.unit_interval(&format!("{tp}.comfort"), t.comfort, "comfort");
        }
    }

    for (i, rule) in doc.rules.iter().enumerate() {
        let rp = format!("rules[{i}]");
        let none = BTreeSet::new();
        c.pattern(&format!("{rp}.head"), &rule.head, &none, false);
        c.pattern(&format!("{rp}.body"), &rule.body, &none, true);
        c.grounded_by(&format!("{rp}.head"), &rule.head, &rule.body.bound_vars(), "the rule body");
    }

    let mut goal_ids = HashSet::new();
    for (i, goal) in doc.goals.iter().enumerate() {
        let gp = format!("goals[{i}]");
        c.symbol(&format!("{gp}.id"), &goal.id);
        if !goal_ids.insert(&goal.id) {
            c.report(format!("{gp}.id"), Category::DuplicateId, format!("goal {} is defined twice", goal.id));
        }
        c.pattern(&format!("{gp}.target"), &goal.target, &BTreeSet::new(), true);
        c.non_negative(&format!("{gp}.maxCost"), goal.max_cost, "maxCost");
        c.unit_interval(&format!("{gp}.minBelief"), goal.min_belief, "minBelief");
        c.unit_interval(&format!("{gp}.minComfort"), goal.min_comfort, "minComfort");
        let target_vars = goal.target.bound_vars();
        for (k, v) in goal.report.iter().enumerate() {
            if !target_vars.contains(v) {
                c.report(format!("{gp}.report[{k}]"), Category::UnboundVariable, format!("reported {v} does not occur in the target"));
            }
        }
    }

    c.out
}
