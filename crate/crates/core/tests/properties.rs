//! Generated-input properties of matching, saturation, transitions and
//! timeline merging.

use std::sync::Arc;

use proptest::prelude::*;
use proptest::sample::subsequence;

use wst_core::engine::GroundedStep;
use wst_core::fact::{match_pattern, substitute};
use wst_core::lifecycle::{detect_conflicts, merge_schedules, validate_path, ConflictKind, ALERT_PREDICATE};
use wst_core::planner::find_paths;
use wst_core::testing::{brute_force_match, laws, random_facts, random_scenario, strategies};
use wst_core::{
    BackwardRule, Binding, DayTimeDuration, FactSet, Goal, Number, Path, PathwayInstance, Pattern, SearchOptions,
    Symbol, Term, Timestamp, TriplePattern, Var, WorldState,
};

fn sym(s: &str) -> Symbol {
    Symbol::new(s).unwrap()
}

fn st(s: &str) -> Term {
    Term::symbol(s).unwrap()
}

fn vterm(s: &str) -> Term {
    Term::Variable(Var::new(s).unwrap())
}

fn world(doc: &wst_core::ScenarioDocument) -> WorldState {
    WorldState::new(doc.initial_state.clone(), doc.rules.clone().into()).unwrap()
}

fn holds(law: laws::Law) -> Result<(), TestCaseError> {
    law.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn match_equals_brute_force(facts in strategies::facts(20), triples in prop::collection::vec(strategies::triple(), 0..=4)) {
        let facts: FactSet = facts.into_iter().collect();
        let pattern = Pattern::triples(triples);
        let got = match_pattern(&pattern, &facts, &Binding::new()).unwrap();
        prop_assert_eq!(&got, &brute_force_match(&pattern, &facts).unwrap());
        for b in &got {
            prop_assert!(substitute(&pattern, b).unwrap().is_subset(&facts));
        }
    }

    #[test]
    fn hash_ignores_insertion_order(facts in strategies::facts(20), seed in any::<u64>()) {
        let forward: FactSet = facts.iter().cloned().collect();
        let mut shuffled = facts.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let mut doubled = shuffled.clone();
        doubled.extend(facts.iter().cloned());
        let backward: FactSet = doubled.into_iter().collect();
        prop_assert_eq!(forward.canonical_hash(), backward.canonical_hash());
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn saturation_matches_naive_closure(facts in strategies::facts(12), rules in strategies::rules(3)) {
        holds(laws::saturation_matches_naive(&facts.into_iter().collect(), &rules))?;
    }

    #[test]
    fn saturation_is_idempotent(facts in strategies::facts(12), rules in strategies::rules(3)) {
        holds(laws::saturation_idempotent(&facts.into_iter().collect(), &rules))?;
    }

    #[test]
    fn saturation_is_monotone(small in strategies::facts(8), extra in strategies::facts(8), rules in strategies::rules(3)) {
        holds(laws::saturation_monotone(&small.into_iter().collect(), &extra.into_iter().collect(), &rules))?;
    }

    #[test]
    fn saturation_ignores_rule_order(facts in strategies::facts(12), rules in strategies::rules(4)) {
        holds(laws::saturation_order_independent(&facts.into_iter().collect(), &rules))?;
    }

    #[test]
    fn frame_property(seed in any::<u64>()) {
        holds(laws::frame(&random_scenario(seed)))?;
    }

    #[test]
    fn condition_persists(seed in any::<u64>()) {
        holds(laws::condition_persistence(&random_scenario(seed)))?;
    }

    #[test]
    fn start_then_end_equals_atomic(seed in any::<u64>()) {
        holds(laws::phase_composition(&random_scenario(seed)))?;
    }

    #[test]
    fn single_occurrence_over_sequences(seed in any::<u64>(), choices in prop::collection::vec(0usize..64, 1..6)) {
        holds(laws::single_occurrence(&random_scenario(seed), &choices))?;
    }

    #[test]
    fn merge_preserves_instance_order(
        shapes in prop::collection::vec((prop::collection::vec(0u64..4, 1..=3), 0u64..6), 1..=3),
        keep in subsequence(vec![0usize, 1, 2], 0..=3),
    ) {
        let instances: Vec<PathwayInstance> = shapes
            .iter()
            .enumerate()
            .map(|(i, (days, epoch))| synthetic_instance(&format!("i{i}"), days, *epoch))
            .collect();
        let mut perms = vec![instances.clone()];
        let mut rev = instances.clone();
        rev.reverse();
        perms.push(rev);
        let picked: Vec<PathwayInstance> = keep.iter().filter_map(|&k| instances.get(k).cloned()).collect();
        perms.push(picked);

        for set in perms {
            let merged = merge_schedules(&set);
            prop_assert_eq!(merged.len(), set.iter().map(|i| i.path.steps.len()).sum::<usize>());
            for inst in &set {
                let order: Vec<usize> = merged.iter().filter(|m| m.instance == inst.id).map(|m| m.step_index).collect();
                prop_assert_eq!(order, (0..inst.path.steps.len()).collect::<Vec<_>>());
            }
            for w in merged.windows(2) {
                prop_assert!(w[0].step.start <= w[1].step.start);
            }
        }
    }

    #[test]
    fn validation_and_simulation_are_pure(seed in any::<u64>()) {
        let doc = random_scenario(seed);
        let state = world(&doc);
        let goal = &doc.goals[0];
        let opts = SearchOptions { max_depth: 3, ..SearchOptions::default() };
        let paths = find_paths(&state, goal, &doc.maps, opts).unwrap();
        let instances: Vec<PathwayInstance> = paths
            .into_iter()
            .take(2)
            .enumerate()
            .map(|(i, p)| PathwayInstance::new(format!("i{i}"), goal.clone(), p, Timestamp(0)))
            .collect();
        let before = (state.version(), state.hash());
        for inst in &instances {
            prop_assert!(validate_path(&state, inst, &doc.maps).unwrap().is_reachable());
        }
        detect_conflicts(&state, &instances, &doc.maps, state.rules().clone()).unwrap();
        prop_assert_eq!((state.version(), state.hash()), before);
    }

    #[test]
    fn alert_rules_only_add_explicit_reports(seed in any::<u64>()) {
        let doc = random_scenario(seed);
        let state = world(&doc);
        let goal = &doc.goals[0];
        let paths = find_paths(&state, goal, &doc.maps, SearchOptions { max_depth: 3, ..SearchOptions::default() }).unwrap();
        let instances: Vec<PathwayInstance> = paths
            .into_iter()
            .take(2)
            .enumerate()
            .map(|(i, p)| PathwayInstance::new(format!("i{i}"), goal.clone(), p, Timestamp(0)))
            .collect();
        let explicit = |rules: Arc<[BackwardRule]>| -> Vec<_> {
            detect_conflicts(&state, &instances, &doc.maps, rules)
                .unwrap()
                .into_iter()
                .filter(|r| r.kind == ConflictKind::Explicit)
                .map(|r| (r.at_step, r.evidence))
                .collect()
        };
        let before = explicit(state.rules().clone());
        let mut rules: Vec<BackwardRule> = state.rules().to_vec();
        // Fires whenever any step is in progress.
        rules.push(BackwardRule::new(
            Pattern::triples(vec![TriplePattern::new(vterm("s"), sym(ALERT_PREDICATE), st("ex:busy_alert"))]),
            Pattern::triples(vec![TriplePattern::new(vterm("s"), sym("ex:busy"), vterm("w"))]),
        ));
        let after = explicit(rules.into());
        for r in &before {
            prop_assert!(after.contains(r));
        }
    }
}

fn synthetic_instance(id: &str, days: &[u64], epoch_days: u64) -> PathwayInstance {
    let steps: Vec<GroundedStep> = days
        .iter()
        .enumerate()
        .map(|(i, d)| GroundedStep {
            map: sym("ex:m"),
            action: sym(&format!("ex:{id}_{i}")),
            binding: Binding::new(),
            retracts_at_start: FactSet::new(),
            asserts_during: FactSet::new(),
            asserts_at_end: FactSet::new(),
            duration: DayTimeDuration::from_days(*d),
            cost: Number::new(0.0).unwrap(),
            belief: Number::new(1.0).unwrap(),
            comfort: Number::new(1.0).unwrap(),
            start: Timestamp(0),
            end: Timestamp(0),
        })
        .collect();
    let goal = Goal {
        id: sym("ex:g"),
        target: Pattern::default(),
        max_duration: DayTimeDuration::from_days(100),
        max_cost: Number::new(0.0).unwrap(),
        min_belief: Number::new(0.0).unwrap(),
        min_comfort: Number::new(0.0).unwrap(),
        report: Vec::new(),
    };
    let path = Path {
        steps,
        duration: DayTimeDuration::ZERO,
        cost: Number::new(0.0).unwrap(),
        belief: Number::new(1.0).unwrap(),
        comfort: Number::new(1.0).unwrap(),
        reported: Binding::new(),
        final_state_hash: String::new(),
    };
    PathwayInstance::new(id, goal, path, Timestamp(0).after(DayTimeDuration::from_days(epoch_days)))
}

#[test]
fn random_fact_sets_stay_small() {
    assert!(random_facts(7, 20).len() <= 20);
}
