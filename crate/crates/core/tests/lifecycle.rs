//! Pathway instances over time: validation after drift, advancing with
//! observed values, and limit handling in the planner.

use wst_core::dsl;
use wst_core::lifecycle::{advance, validate_path, FailureReason};
use wst_core::planner::find_paths;
use wst_core::{Error, Number, PathwayInstance, ScenarioDocument, SearchOptions, Timestamp, Verdict, WorldState};

const COLON: &str = include_str!("../fixtures/colon_cancer.wst");

fn setup() -> (ScenarioDocument, WorldState, PathwayInstance) {
    let doc = dsl::parse(COLON).unwrap();
    let state = WorldState::new(doc.initial_state.clone(), doc.rules.clone().into()).unwrap();
    let goal = doc.goal("care:colon_cancer_cured").unwrap().clone();
    let path = find_paths(&state, &goal, &doc.maps, SearchOptions::default()).unwrap().remove(0);
    let inst = PathwayInstance::new("colon", goal, path, Timestamp(0));
    (doc, state, inst)
}

fn facts(doc: &ScenarioDocument, text: &str) -> wst_core::FactSet {
    dsl::parse_facts(text, &doc.prefixes).unwrap()
}

#[test]
fn fresh_instance_is_reachable() {
    let (doc, state, inst) = setup();
    assert!(validate_path(&state, &inst, &doc.maps).unwrap().is_reachable());
}

#[test]
fn advancing_with_expected_values_keeps_the_goal() {
    let (doc, state, inst) = setup();
    let (inst, state) = advance(&inst, &Default::default(), &state, &doc.maps).unwrap();
    assert_eq!((inst.cursor, state.version()), (1, 1));
    assert!(validate_path(&state, &inst, &doc.maps).unwrap().is_reachable());
    let (inst, state) = advance(&inst, &Default::default(), &state, &doc.maps).unwrap();
    assert!(inst.is_complete());
    assert_eq!(state.hash(), inst.path.final_state_hash);
    assert!(validate_path(&state, &inst, &doc.maps).unwrap().is_reachable());
    assert!(matches!(advance(&inst, &Default::default(), &state, &doc.maps), Err(Error::CursorExhausted)));
}

#[test]
fn observed_value_overrides_expected_one() {
    let (doc, state, inst) = setup();
    let observed = facts(&doc, "ex:pat1 care:tumor_size 40 .");
    let (_, next) = advance(&inst, &observed, &state, &doc.maps).unwrap();
    let sizes: Vec<f64> = next
        .base()
        .iter()
        .filter(|f| f.predicate().as_str() == "care:tumor_size")
        .map(|f| f.object().as_number().unwrap().value())
        .collect();
    assert_eq!(sizes, [40.0]);
}

#[test]
fn worse_measurement_makes_goal_unreachable() {
    let (doc, state, inst) = setup();
    // Expected risk after the first step is 0.2; 0.3 leaves 0.12 after
    // surgery, above the 0.1 target.
    let observed = facts(&doc, "ex:pat1 care:metastasis_risk 0.3 .");
    let (inst, state) = advance(&inst, &observed, &state, &doc.maps).unwrap();
    match validate_path(&state, &inst, &doc.maps).unwrap() {
        Verdict::NotReachable { step, reason, unmatched, .. } => {
            assert_eq!(step, None);
            assert_eq!(reason, FailureReason::GoalUnmatched);
            assert_eq!(unmatched, inst.goal.target);
        }
        v => panic!("expected NotReachable, got {v:?}"),
    }
}

#[test]
fn missing_precondition_names_the_step() {
    let (doc, state, inst) = setup();
    let drifted = state.base().difference(&facts(&doc, "ex:pat1 care:tnm_t 3 ."));
    let state = state.with_base(drifted).unwrap();
    match validate_path(&state, &inst, &doc.maps).unwrap() {
        Verdict::NotReachable { step, action, reason, unmatched } => {
            assert_eq!(step, Some(0));
            assert_eq!(action.unwrap().local(), "Neoadjuvant_chemoradiotherapy");
            assert_eq!(reason, FailureReason::PreconditionFailed);
            let t = doc.transitions().find(|t| t.action.local() == "Neoadjuvant_chemoradiotherapy").unwrap();
            assert_eq!(unmatched, t.condition);
        }
        v => panic!("expected NotReachable, got {v:?}"),
    }
    assert!(matches!(advance(&inst, &Default::default(), &state, &doc.maps), Err(Error::NotApplicable { .. })));
}

fn plan_with(edit: impl Fn(&mut ScenarioDocument)) -> Vec<Vec<String>> {
    let mut doc = dsl::parse(COLON).unwrap();
    edit(&mut doc);
    let state = WorldState::new(doc.initial_state.clone(), doc.rules.clone().into()).unwrap();
    let goal = doc.goals[0].clone();
    find_paths(&state, &goal, &doc.maps, SearchOptions::default())
        .unwrap()
        .iter()
        .map(|p| p.actions().iter().map(|a| a.local().to_string()).collect())
        .collect()
}

fn set_surgery_cost(doc: &mut ScenarioDocument, cost: f64) {
    for t in doc.maps.iter_mut().flat_map(|m| m.transitions.iter_mut()) {
        if t.action.local() == "surgery_colon_cancer" {
            t.cost = Number::new(cost).unwrap();
        }
    }
}

#[test]
fn cost_limit_removes_only_the_expensive_path() {
    // 18000 + 33000 = 51000 > 50000, while 14147 + 33000 = 47147 fits.
    assert_eq!(plan_with(|d| set_surgery_cost(d, 33000.0)), [["Neoadjuvant_chemoradiotherapy", "surgery_colon_cancer"]]);
    // 18000 + 32000 = 50000 exactly: inclusive.
    assert_eq!(plan_with(|d| set_surgery_cost(d, 32000.0)).len(), 2);
    // 18000 + 32000.5 just above.
    assert_eq!(plan_with(|d| set_surgery_cost(d, 32000.5)).len(), 1);
}

#[test]
fn belief_limit_is_inclusive() {
    // Products: 0.9 * 0.95 = 0.855 and 0.95 * 0.85 = 0.8075.
    let only_first = plan_with(|d| d.goals[0].min_belief = Number::new(0.83).unwrap());
    assert_eq!(only_first, [["Neoadjuvant_chemoradiotherapy", "surgery_colon_cancer"]]);
    assert_eq!(plan_with(|d| d.goals[0].min_belief = Number::new(0.8075).unwrap()).len(), 2);
    assert_eq!(plan_with(|d| d.goals[0].min_belief = Number::new(0.855).unwrap()).len(), 1);
    assert!(plan_with(|d| d.goals[0].min_belief = Number::new(0.86).unwrap()).is_empty());
}

#[test]
fn duration_and_comfort_limits_are_inclusive() {
    use wst_core::DayTimeDuration;
    // Durations 64 and 104 days; comforts 0.2 and 0.15.
    assert_eq!(plan_with(|d| d.goals[0].max_duration = DayTimeDuration::from_days(104)).len(), 2);
    assert_eq!(plan_with(|d| d.goals[0].max_duration = DayTimeDuration::from_days(103)).len(), 1);
    assert_eq!(plan_with(|d| d.goals[0].min_comfort = Number::new(0.15).unwrap()).len(), 2);
    assert_eq!(plan_with(|d| d.goals[0].min_comfort = Number::new(0.2).unwrap()).len(), 1);
}

#[test]
fn max_paths_truncates_after_sorting() {
    let (doc, state, _) = setup();
    let goal = doc.goals[0].clone();
    let one = find_paths(&state, &goal, &doc.maps, SearchOptions { max_paths: 1, ..SearchOptions::default() }).unwrap();
    let all = find_paths(&state, &goal, &doc.maps, SearchOptions::default()).unwrap();
    assert_eq!(one, all[..1]);
    let shallow = find_paths(&state, &goal, &doc.maps, SearchOptions { max_depth: 1, ..SearchOptions::default() }).unwrap();
    assert!(shallow.is_empty());
}
