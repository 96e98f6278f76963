use std::fmt::Write;

use crate::document::ScenarioDocument;
use crate::fact::Pattern;

/// Canonical text for a document: LF line endings, two-space indentation,
/// prefixes sorted, state facts in canonical order, and in every graph the
/// triples before the guards.
pub fn serialize(doc: &ScenarioDocument) -> String {
    let mut out = String::new();
    for (name, iri) in &doc.prefixes {
        let _ = writeln!(out, "prefix {name}: <{iri}>");
    }

    let mut sections: Vec<String> = Vec::new();
    if !doc.initial_state.is_empty() {
        let mut s = String::from("state {\n");
        for fact in doc.initial_state.iter() {
            let _ = writeln!(s, "  {fact} .");
        }
        s.push_str("}\n");
        sections.push(s);
    }
    for map in &doc.maps {
        let mut s = format!("map {} {{\n", map.id);
        for t in &map.transitions {
            let _ = writeln!(s, "  transition {} {{", t.action);
            graph(&mut s, 4, "from ", &t.from);
            graph(&mut s, 4, "during ", &t.during);
            graph(&mut s, 4, "to ", &t.to);
            let _ = writeln!(s, "    duration {}", t.duration);
            let _ = writeln!(s, "    cost {}", t.cost);
            let _ = writeln!(s, "    belief {}", t.belief);
            let _ = writeln!(s, "    comfort {}", t.comfort);
            graph(&mut s, 4, "condition ", &t.condition);
            s.push_str("  }\n");
        }
        s.push_str("}\n");
        sections.push(s);
    }
    for rule in &doc.rules {
        let mut s = String::from("rule {\n");
        graph(&mut s, 2, "", &rule.head);
        s.push_str("  <=\n");
        graph(&mut s, 2, "", &rule.body);
        s.push_str("}\n");
        sections.push(s);
    }
    for goal in &doc.goals {
        let mut s = format!("goal {} {{\n", goal.id);
        graph(&mut s, 2, "target ", &goal.target);
        let _ = writeln!(
            s,
            "  limits ({} {} {} {})",
            goal.max_duration, goal.max_cost, goal.min_belief, goal.min_comfort
        );
        if !goal.report.is_empty() {
            let vars: Vec<String> = goal.report.iter().map(ToString::to_string).collect();
            let _ = writeln!(s, "  report ({})", vars.join(" "));
        }
        s.push_str("}\n");
        sections.push(s);
    }

    for section in sections {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&section);
    }
    out
}

fn graph(out: &mut String, indent: usize, label: &str, p: &Pattern) {
    let pad = " ".repeat(indent);
    if p.is_empty() {
        let _ = writeln!(out, "{pad}{label}{{ }}");
        return;
    }
    let _ = writeln!(out, "{pad}{label}{{");
    for t in &p.triples {
        let _ = writeln!(out, "{pad}  {t} .");
    }
    for g in &p.guards {
        let _ = write!(out, "{pad}  {} {} {}", g.args[0], g.op.name(), g.args[1]);
        if let Some(r) = &g.result {
            let _ = write!(out, " -> {r}");
        }
        out.push_str(" .\n");
    }
    let _ = writeln!(out, "{pad}}}");
}
