//! Weighted state transition engine.
//!
//! Clinical pathway steps are modelled as transitions that retract their
//! `from` facts, keep their `condition` facts and assert their `to` facts,
//! weighted by duration, cost, belief and comfort. On top of that the crate
//! generates candidate pathways toward a goal, validates pathways in flight,
//! merges concurrent pathways on a timeline and predicts conflicts between
//! them.

pub mod api;
pub mod builtin;
pub mod document;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod fact;
pub mod interchange;
pub mod kb;
pub mod lifecycle;
pub mod planner;
pub mod term;

#[cfg(feature = "testing")]
pub mod testing;

pub use builtin::{BuiltinCall, BuiltinOp};
pub use document::{Category, Goal, MapDefinition, ScenarioDocument, Violation};
pub use engine::{GroundedStep, TransitionDescription, Weights};
pub use error::Error;
pub use fact::{Binding, Fact, FactSet, Pattern, TriplePattern};
pub use kb::{BackwardRule, WorldState};
pub use lifecycle::{ConflictKind, ConflictReport, PathwayInstance, Verdict};
pub use planner::{Path, SearchOptions};
pub use term::{DayTimeDuration, Number, Symbol, Term, Timestamp, Var};
