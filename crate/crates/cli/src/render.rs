//! Plain-text rendering of service responses.

use std::fmt::Write;

use wst_core::api::{AdvanceResponse, ConflictsResponse, MergedResponse, PlanResponse, ValidateResponse};
use wst_core::kb::StateSnapshot;
use wst_core::lifecycle::{Evidence, StepRef};
use wst_core::{ConflictKind, FactSet, Pattern, Verdict};

fn pattern(p: &Pattern) -> String {
    let mut parts: Vec<String> = p.triples.iter().map(|t| t.to_string()).collect();
    for g in &p.guards {
        let mut s = format!("{}({}, {}", g.op.name(), g.args[0], g.args[1]);
        if let Some(r) = &g.result {
            let _ = write!(s, ", {r}");
        }
        s.push(')');
        parts.push(s);
    }
    parts.join(" . ")
}

fn facts(out: &mut String, indent: &str, set: &FactSet) {
    for f in set.iter() {
        let _ = writeln!(out, "{indent}{f}");
    }
}

fn step_ref(r: &StepRef) -> String {
    format!("{} step {} {} at {}", r.instance, r.step + 1, r.action, r.start)
}

pub fn plan(resp: &PlanResponse) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "goal {}: {} path(s)", resp.goal, resp.paths.len());
    for (i, p) in resp.paths.iter().enumerate() {
        let _ = writeln!(
            out,
            "[{i}] cost {} duration {} belief {} comfort {}",
            p.cost, p.duration, p.belief, p.comfort
        );
        for s in &p.steps {
            let _ = writeln!(out, "    {} {} {}", s.map, s.action, s.binding);
        }
        if !p.reported.is_empty() {
            let _ = writeln!(out, "    reported {}", p.reported);
        }
    }
    out
}

pub fn validation(resp: &ValidateResponse) -> String {
    match &resp.verdict {
        Verdict::Reachable { reported, .. } => format!("{}: reachable {}\n", resp.instance, reported),
        Verdict::NotReachable { step, action, reason, unmatched } => {
            let at = match (step, action) {
                (Some(n), Some(a)) => format!(" at step {} {a}", n + 1),
                _ => String::new(),
            };
            format!("{}: not reachable{at}: {reason:?}, unmatched {}\n", resp.instance, pattern(unmatched))
        }
    }
}

pub fn merged(resp: &MergedResponse) -> String {
    let mut out = String::new();
    for m in &resp.steps {
        let _ = writeln!(
            out,
            "{:>8} {:>8}  {} step {} {}",
            m.step.start.to_string(),
            m.step.end.to_string(),
            m.instance,
            m.step_index + 1,
            m.step.action
        );
    }
    out
}

pub fn conflicts(resp: &ConflictsResponse) -> String {
    if resp.reports.is_empty() {
        return "no conflicts\n".into();
    }
    let mut out = String::new();
    for r in &resp.reports {
        let kind = match r.kind {
            ConflictKind::Explicit => "explicit",
            ConflictKind::Implicit => "implicit",
        };
        let at = r.at_step.as_ref().map(|s| format!(" at {}", step_ref(s))).unwrap_or_default();
        let _ = writeln!(out, "{kind}{at}");
        match &r.evidence {
            Evidence::Alerts { facts: f } => facts(&mut out, "    ", f),
            Evidence::Goal { goal, instance, blocked_step, unmatched } => {
                let _ = writeln!(out, "    goal {goal} of {instance} no longer reached");
                if let Some(b) = blocked_step {
                    let _ = writeln!(out, "    blocked {}", step_ref(b));
                }
                if let Some(u) = unmatched {
                    let _ = writeln!(out, "    unmatched {}", pattern(u));
                }
            }
        }
    }
    out
}

pub fn simulation(steps: &[AdvanceResponse], state: &StateSnapshot) -> String {
    let mut out = String::new();
    for s in steps {
        let done = &s.instance.path.steps[s.instance.cursor - 1];
        let _ = writeln!(out, "v{} {} step {} {}", s.version, s.instance.id, s.instance.cursor, done.action);
        for v in &s.verdicts {
            let line = validation(&ValidateResponse {
                instance: v.instance.clone(),
                version: s.version,
                verdict: v.verdict.clone(),
            });
            let _ = write!(out, "    {line}");
        }
    }
    let _ = writeln!(out, "final state v{} {}", state.version, state.hash);
    facts(&mut out, "    ", &state.base);
    out
}
