//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs without a test harness so the report stays readable.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use wst_client::Client;
use wst_core::api::{AuditEntry, Operation, SelectRequest};
use wst_core::engine::{applicable, apply_atomic};
use wst_core::lifecycle::{validate_path, Evidence};
use wst_core::planner::{find_paths, within_limits};
use wst_core::testing::{brute_force_paths, laws, random_scenario, strategies, OracleStep};
use wst_core::{
    dsl, interchange, ConflictKind, DayTimeDuration, FactSet, Number, PathwayInstance, ScenarioDocument,
    SearchOptions, Symbol, Timestamp, WorldState,
};

const COLON: &str = include_str!("../../core/fixtures/colon_cancer.wst");
const COMORBIDITY: &str = include_str!("../../core/fixtures/comorbidity.wst");
const MERGE: &str = include_str!("../../core/fixtures/merge_timing.wst");
const CONTRAST: &str = include_str!("../../core/fixtures/contrast_conflict.wst");
const FIXTURES: [(&str, &str); 4] = [
    ("colon_cancer", COLON),
    ("comorbidity", COMORBIDITY),
    ("merge_timing", MERGE),
    ("contrast_conflict", CONTRAST),
];

const TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn load(src: &str) -> Result<ScenarioDocument, String> {
    dsl::parse(src).map_err(|e| format!("{e}: {:?}", e.diagnostics()))
}

fn world(doc: &ScenarioDocument) -> Result<WorldState, String> {
    WorldState::new(doc.initial_state.clone(), doc.rules.clone().into()).map_err(|e| e.to_string())
}

fn sym(s: &str) -> Symbol {
    Symbol::new(s).expect("static name")
}

fn single_number(state: &WorldState, predicate: &str) -> Result<f64, String> {
    let values: Vec<f64> = state
        .base()
        .iter()
        .filter(|f| f.predicate().as_str() == predicate)
        .filter_map(|f| f.object().as_number().map(|n| n.value()))
        .collect();
    match values[..] {
        [v] => Ok(v),
        _ => Err(format!("{predicate} has {} values", values.len())),
    }
}

fn local_actions(path: &wst_core::Path) -> Vec<String> {
    path.actions().iter().map(|a| a.local().to_string()).collect()
}

fn within_budget(started: Instant, budget: Duration) -> Result<Duration, String> {
    let took = started.elapsed();
    check!(took < budget, "took {took:?}, budget {budget:?}");
    Ok(took)
}

fn listing_values() -> Outcome {
    let started = Instant::now();
    let doc = load(COLON)?;
    let state = world(&doc)?;
    check!(single_number(&state, "care:tumor_size")? == 50.0, "fixture patient must start at size 50");
    check!(single_number(&state, "care:metastasis_risk")? == 0.4, "fixture patient must start at risk 0.4");
    check!(single_number(&state, "care:tnm_t")? == 3.0, "fixture patient must start at T3");
    let t = doc
        .transition(&sym("care:Colon_cancer"), &sym("action:Neoadjuvant_chemoradiotherapy"))
        .ok_or("neoadjuvant transition missing")?;
    let bindings = applicable(&state, t).map_err(|e| e.to_string())?;
    check!(bindings.len() == 1, "expected one binding, got {}", bindings.len());
    let next = apply_atomic(&state, t, &bindings[0]).map_err(|e| e.to_string())?;
    // 50 * 0.7 and 0.4 * 0.5.
    let size = single_number(&next, "care:tumor_size")?;
    let risk = single_number(&next, "care:metastasis_risk")?;
    check!((size - 35.0).abs() <= TOL, "tumor_size {size}");
    check!((risk - 0.2).abs() <= TOL, "metastasis_risk {risk}");
    let weights = (t.duration.to_string(), t.cost.value(), t.belief.value(), t.comfort.value());
    check!(weights == ("P50D".to_string(), 14147.0, 0.9, 0.4), "weights {weights:?}");
    let took = within_budget(started, Duration::from_secs(1))?;
    Ok(format!("size 35, risk 0.2, weights (P50D, 14147, 0.9, 0.4) in {took:?}"))
}

fn two_paths() -> Outcome {
    let started = Instant::now();
    let doc = load(COLON)?;
    let state = world(&doc)?;
    let goal = doc.goal("care:colon_cancer_cured").ok_or("goal missing")?;
    let paths = find_paths(&state, goal, &doc.maps, SearchOptions::default()).map_err(|e| e.to_string())?;
    let actions: Vec<Vec<String>> = paths.iter().map(local_actions).collect();
    let expected = [
        vec!["Neoadjuvant_chemoradiotherapy".to_string(), "surgery_colon_cancer".to_string()],
        vec!["surgery_colon_cancer".to_string(), "Adjuvant_chemoradiotherapy".to_string()],
    ];
    check!(actions == expected, "paths {actions:?}");
    check!(paths.iter().all(|p| within_limits(&p.weights(), goal)), "a path violates the goal limits");
    let (a, b) = (&paths[0], &paths[1]);
    check!(a.cost < b.cost && a.duration < b.duration, "neoadjuvant-first path is not cheaper and shorter");
    let took = within_budget(started, Duration::from_secs(1))?;
    Ok(format!("costs {} < {}, durations {} < {} in {took:?}", a.cost, b.cost, a.duration, b.duration))
}

fn plan_variant(edit: impl Fn(&mut ScenarioDocument)) -> Result<Vec<Vec<String>>, String> {
    let mut doc = load(COLON)?;
    edit(&mut doc);
    let state = world(&doc)?;
    let paths = find_paths(&state, &doc.goals[0], &doc.maps, SearchOptions::default()).map_err(|e| e.to_string())?;
    Ok(paths.iter().map(local_actions).collect())
}

fn surgery_cost(cost: f64) -> impl Fn(&mut ScenarioDocument) {
    move |doc| {
        for t in doc.maps.iter_mut().flat_map(|m| m.transitions.iter_mut()) {
            if t.action.local() == "surgery_colon_cancer" {
                t.cost = Number::new(cost).expect("finite");
            }
        }
    }
}

fn min_belief(v: f64) -> impl Fn(&mut ScenarioDocument) {
    move |doc| doc.goals[0].min_belief = Number::new(v).expect("finite")
}

fn limit_pruning() -> Outcome {
    let neo_first = vec!["Neoadjuvant_chemoradiotherapy".to_string(), "surgery_colon_cancer".to_string()];
    // Surgery-first costs 18000 + surgery, neoadjuvant-first 14147 + surgery.
    let over = plan_variant(surgery_cost(33000.0))?;
    check!(over == [neo_first.clone()], "surgery 33000: {over:?}");
    let at = plan_variant(surgery_cost(32000.0))?;
    check!(at.len() == 2, "surgery 32000 (total exactly 50000): {at:?}");
    let above = plan_variant(surgery_cost(32000.0 + 1e-6))?;
    check!(above == [neo_first.clone()], "surgery just above 32000: {above:?}");
    // Belief products 0.855 and 0.8075.
    let mid = plan_variant(min_belief(0.83))?;
    check!(mid == [neo_first.clone()], "minBelief 0.83: {mid:?}");
    check!(plan_variant(min_belief(0.8075))?.len() == 2, "minBelief 0.8075 must keep both");
    check!(plan_variant(min_belief(0.855))? == [neo_first], "minBelief 0.855 must keep one");
    check!(plan_variant(min_belief(0.86))?.is_empty(), "minBelief 0.86 must keep none");
    Ok("cost and belief limits prune exactly one path, equality kept".into())
}

fn select(goal: &str, index: usize, epoch_days: u64, expected_version: u64) -> SelectRequest {
    SelectRequest {
        goal: goal.into(),
        path_index: index,
        epoch: Timestamp(0).after(DayTimeDuration::from_days(epoch_days)),
        expected_version,
        options: SearchOptions::default(),
    }
}

async fn explicit_conflict(client: &Client) -> Outcome {
    let doc = load(COMORBIDITY)?;
    let alert = dsl::parse_facts("ex:pat1 gps:alert conflict:Pramipexol_surgery_colon_cancer .", &doc.prefixes)
        .map_err(|e| e.to_string())?;
    let medication =
        dsl::parse_facts("ex:pat1 gps:medication med:Pramipexol .", &doc.prefixes).map_err(|e| e.to_string())?;

    let with = client.create_session_text(COMORBIDITY).await.map_err(|e| e.to_string())?.id;
    client.select(&with, &select("care:colon_cancer_cured", 0, 0, 0)).await.map_err(|e| e.to_string())?;
    let reports = client.conflicts(&with).await.map_err(|e| e.to_string())?.reports;
    let explicit: Vec<_> = reports.iter().filter(|r| r.kind == ConflictKind::Explicit).collect();
    check!(!explicit.is_empty(), "no explicit report: {reports:?}");
    check!(
        explicit.iter().all(|r| matches!(&r.evidence, Evidence::Alerts { facts } if facts == &alert)),
        "evidence does not match the alert fact: {explicit:?}"
    );

    let without = client.create_session_text(COMORBIDITY).await.map_err(|e| e.to_string())?.id;
    client.update_state(&without, 0, FactSet::new(), medication).await.map_err(|e| e.to_string())?;
    client.select(&without, &select("care:colon_cancer_cured", 0, 0, 1)).await.map_err(|e| e.to_string())?;
    let reports = client.conflicts(&without).await.map_err(|e| e.to_string())?.reports;
    check!(reports.is_empty(), "reports remain without the medication: {reports:?}");
    Ok(format!("{} explicit report(s) over HTTP, none once medication is retracted", explicit.len()))
}

async fn merge_order(client: &Client) -> Outcome {
    let id = client.create_session_text(MERGE).await.map_err(|e| e.to_string())?.id;
    client.select(&id, &select("x:goal_a", 0, 0, 0)).await.map_err(|e| e.to_string())?;
    client.select(&id, &select("x:goal_b", 0, 15, 1)).await.map_err(|e| e.to_string())?;
    let merged = client.merged(&id).await.map_err(|e| e.to_string())?;
    let order: Vec<&str> = merged.steps.iter().map(|m| m.step.action.local()).collect();
    check!(order == ["a1", "a2", "b1", "a3", "b2"], "order {order:?}");
    Ok(order.join(", "))
}

fn planner_oracle() -> Outcome {
    let started = Instant::now();
    let options = SearchOptions { max_depth: 4, max_paths: usize::MAX, prune: true };
    let (mut scenarios, mut with_paths, mut total) = (0, 0, 0);
    for seed in 0..250u64 {
        let doc = random_scenario(seed);
        check!(doc.initial_state.len() <= 20 && doc.transitions().count() <= 5, "seed {seed}: generator out of bounds");
        let goal = &doc.goals[0];
        let state = world(&doc)?;
        let paths = find_paths(&state, goal, &doc.maps, options).map_err(|e| format!("seed {seed}: {e}"))?;
        let got: BTreeSet<Vec<OracleStep>> = paths
            .iter()
            .map(|p| {
                p.steps
                    .iter()
                    .map(|s| OracleStep { map: s.map.clone(), action: s.action.clone(), binding: s.binding.clone() })
                    .collect()
            })
            .collect();
        let expected = brute_force_paths(&state, goal, &doc.maps, 4).map_err(|e| format!("seed {seed}: {e}"))?;
        check!(got.len() == paths.len(), "seed {seed}: duplicate paths");
        check!(got == expected, "seed {seed}: planner {} paths, enumerator {}", got.len(), expected.len());
        for p in paths {
            let inst = PathwayInstance::new("i", goal.clone(), p, Timestamp(0));
            let verdict = validate_path(&state, &inst, &doc.maps).map_err(|e| format!("seed {seed}: {e}"))?;
            check!(verdict.is_reachable(), "seed {seed}: planned path not reachable: {verdict:?}");
            total += 1;
        }
        scenarios += 1;
        with_paths += usize::from(!got.is_empty());
    }
    let took = within_budget(started, Duration::from_secs(60))?;
    Ok(format!("{scenarios} scenarios ({with_paths} with paths, {total} paths validated) in {took:?}"))
}

fn run_law<S: Strategy>(runner: &mut TestRunner, name: &str, strategy: S, law: impl Fn(S::Value) -> laws::Law) -> Result<(), String> {
    runner
        .run(&strategy, |v| law(v).map_err(TestCaseError::fail))
        .map_err(|e| format!("{name}: {e}"))
}

fn semantics() -> Outcome {
    let cases = 256;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    run_law(&mut runner, "frame", any::<u64>(), |s| laws::frame(&random_scenario(s)))?;
    run_law(&mut runner, "condition persistence", any::<u64>(), |s| laws::condition_persistence(&random_scenario(s)))?;
    run_law(
        &mut runner,
        "single occurrence",
        (any::<u64>(), prop::collection::vec(0usize..64, 1..6)),
        |(s, choices)| laws::single_occurrence(&random_scenario(s), &choices),
    )?;
    run_law(&mut runner, "start then end", any::<u64>(), |s| laws::phase_composition(&random_scenario(s)))?;
    let facts = |n| strategies::facts(n).prop_map(|v| v.into_iter().collect::<FactSet>());
    run_law(&mut runner, "saturation idempotence", (facts(12), strategies::rules(3)), |(f, r)| {
        laws::saturation_idempotent(&f, &r)
    })?;
    run_law(&mut runner, "saturation monotonicity", (facts(8), facts(8), strategies::rules(3)), |(a, b, r)| {
        laws::saturation_monotone(&a, &b, &r)
    })?;
    run_law(&mut runner, "saturation order", (facts(12), strategies::rules(4)), |(f, r)| {
        laws::saturation_order_independent(&f, &r)
    })?;
    Ok(format!("7 laws x {cases} generated cases"))
}

async fn round_trips(client: &Client) -> Outcome {
    for (name, src) in FIXTURES {
        let doc = load(src)?;
        let text = dsl::serialize(&doc);
        let again = load(&text).map_err(|e| format!("{name} reparse: {e}"))?;
        check!(again == doc, "{name}: parse of serialize differs");
        check!(dsl::serialize(&again) == text, "{name}: serialize is not a fixpoint");
        let loaded = interchange::load(&interchange::dump(&doc)).map_err(|e| format!("{name}: {e}"))?;
        check!(loaded == doc, "{name}: interchange dump/load differs");
    }

    let doc = load(COMORBIDITY)?;
    let id = client.create_session_text(COMORBIDITY).await.map_err(|e| e.to_string())?.id;
    client.select(&id, &select("care:colon_cancer_cured", 0, 0, 0)).await.map_err(|e| e.to_string())?;
    client.select(&id, &select("care:parkinson_controlled", 0, 0, 1)).await.map_err(|e| e.to_string())?;
    let observed = dsl::parse_facts("ex:pat1 care:tumor_size 38 .", &doc.prefixes).map_err(|e| e.to_string())?;
    client.advance(&id, "i1", 2, observed).await.map_err(|e| e.to_string())?;
    client.conflicts(&id).await.map_err(|e| e.to_string())?;
    let last = client.advance(&id, "i2", 3, FactSet::new()).await.map_err(|e| e.to_string())?;

    let served = client.replay(&id).await.map_err(|e| e.to_string())?;
    check!(served.mismatches.is_empty(), "service replay mismatches at {:?}", served.mismatches);
    check!(served.final_state_hash == last.state_hash, "service replay ends at a different hash");

    let log: Vec<AuditEntry> = client.audit(&id).await.map_err(|e| e.to_string())?;
    let local = wst_service::replay(&doc, &log).map_err(|e| e.to_string())?;
    check!(local.mismatches.is_empty(), "local replay mismatches at {:?}", local.mismatches);
    check!(
        local.final_state_hash == last.state_hash,
        "local replay ends at {} not {}",
        local.final_state_hash,
        last.state_hash
    );

    // A doctored log must not replay cleanly.
    let mut doctored = log.clone();
    let step = doctored
        .iter_mut()
        .find(|e| matches!(e.operation, Operation::Advance { .. }))
        .ok_or("no advance in the log")?;
    if let Operation::Advance { observed, .. } = &mut step.operation {
        *observed = dsl::parse_facts("ex:pat1 care:tumor_size 39 .", &doc.prefixes).map_err(|e| e.to_string())?;
    }
    let tampered = wst_service::replay(&doc, &doctored).map_err(|e| e.to_string())?;
    check!(!tampered.mismatches.is_empty(), "a doctored log replayed without mismatches");

    Ok(format!("{} fixtures, {} audit entries replayed", FIXTURES.len(), local.entries))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
    let dir = tempfile::tempdir().expect("temporary directory");
    let service = runtime
        .block_on(wst_service::start("127.0.0.1:0".parse().expect("address"), dir.path()))
        .expect("service starts");
    let client = Client::new(service.url());

    let criteria: Vec<Criterion> = vec![
        ("listing values", Box::new(listing_values)),
        ("two-path structure", Box::new(two_paths)),
        ("limit pruning", Box::new(limit_pruning)),
        ("explicit conflict", Box::new(|| runtime.block_on(explicit_conflict(&client)))),
        ("merge order", Box::new(|| runtime.block_on(merge_order(&client)))),
        ("planner/validator oracle", Box::new(planner_oracle)),
        ("semantics properties", Box::new(semantics)),
        ("round trips", Box::new(|| runtime.block_on(round_trips(&client)))),
    ];

    let mut failed = 0;
    for (n, (name, run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = guarded(run);
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{took:.2?}]", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{took:.2?}]", n + 1);
            }
        }
    }
    runtime.block_on(service.shutdown()).expect("service stops");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
