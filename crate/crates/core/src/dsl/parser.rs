use std::collections::HashMap;

use crate::builtin::{BuiltinCall, BuiltinOp};
use crate::document::{Category, Goal, MapDefinition, ScenarioDocument};
use crate::engine::TransitionDescription;
use crate::fact::{Fact, Pattern, TriplePattern};
use crate::kb::BackwardRule;
use crate::term::{DayTimeDuration, Number, Symbol, Term, Var};

use super::lexer::{syntax, tokenize, Pos, Tok, Token};
use super::Diagnostic;

/// Output of a successful syntactic parse: the document, non-fatal
/// diagnostics found along the way, and source positions keyed by document
/// path for locating later validation failures.
pub(crate) struct Parsed {
    pub doc: ScenarioDocument,
    pub diagnostics: Vec<Diagnostic>,
    pub spans: HashMap<String, Pos>,
}

pub(crate) fn parse_document(src: &str) -> Result<Parsed, Diagnostic> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, at: 0, diagnostics: Vec::new(), spans: HashMap::new() };
    let mut doc = ScenarioDocument::default();
    let mut state_facts: Vec<(Fact, Pos)> = Vec::new();

    loop {
        let pos = p.pos();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(kw) => match kw.as_str() {
                "prefix" => {
                    p.next();
                    let name = match p.next_tok() {
                        Tok::PrefixName(n) => n,
                        other => return Err(p.unexpected_at(pos, &other, "a prefix name like `care:`")),
                    };
                    let iri = match p.next_tok() {
                        Tok::Iri(i) => i,
                        other => return Err(p.unexpected_at(pos, &other, "an IRI in angle brackets")),
                    };
                    doc.prefixes.insert(name, iri);
                }
                "state" => {
                    p.next();
                    state_facts.extend(p.fact_block()?);
                }
                "map" => {
                    p.next();
                    let i = doc.maps.len();
                    p.span(format!("maps[{i}]"), pos);
                    let id_pos = p.pos();
                    let id = p.qname()?;
                    p.span(format!("maps[{i}].id"), id_pos);
                    p.expect(Tok::LBrace)?;
                    let mut transitions = Vec::new();
                    while !p.eat(&Tok::RBrace) {
                        let path = format!("maps[{i}].transitions[{}]", transitions.len());
                        transitions.push(p.transition(&id, &path)?);
                    }
                    doc.maps.push(MapDefinition { id, transitions });
                }
                "rule" => {
                    p.next();
                    let path = format!("rules[{}]", doc.rules.len());
                    p.span(path.clone(), pos);
                    p.expect(Tok::LBrace)?;
                    let head = p.graph(&format!("{path}.head"))?;
                    p.expect(Tok::Implies)?;
                    let body = p.graph(&format!("{path}.body"))?;
                    p.expect(Tok::RBrace)?;
                    doc.rules.push(BackwardRule::new(head, body));
                }
                "goal" => {
                    p.next();
                    let path = format!("goals[{}]", doc.goals.len());
                    p.span(path.clone(), pos);
                    doc.goals.push(p.goal(&path)?);
                }
                _ => return Err(p.unexpected_at(pos, &Tok::Ident(kw), "`prefix`, `state`, `map`, `rule` or `goal`")),
            },
            other => return Err(p.unexpected_at(pos, &other, "`prefix`, `state`, `map`, `rule` or `goal`")),
        }
    }

    let mut fact_pos: HashMap<Fact, Pos> = HashMap::new();
    for (fact, pos) in state_facts {
        fact_pos.entry(fact.clone()).or_insert(pos);
        doc.initial_state.insert(fact);
    }
    for (i, fact) in doc.initial_state.iter().enumerate() {
        p.spans.insert(format!("initialState[{i}]"), fact_pos[fact]);
    }

    Ok(Parsed { doc, diagnostics: p.diagnostics, spans: p.spans })
}

/// Parses a bare sequence of ground `subject predicate object .` statements.
pub(crate) type FactList = (Vec<(Fact, Pos)>, Vec<Diagnostic>);

pub(crate) fn parse_fact_list(src: &str) -> Result<FactList, Diagnostic> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, at: 0, diagnostics: Vec::new(), spans: HashMap::new() };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        if let Some(f) = p.fact_statement()? {
            out.push(f);
        }
        if !p.eat(&Tok::Dot) && *p.peek() != Tok::Eof {
            let pos = p.pos();
            let t = p.peek().clone();
            return Err(p.unexpected_at(pos, &t, "`.`"));
        }
    }
    Ok((out, p.diagnostics))
}

enum Statement {
    Triple(TriplePattern),
    Guard(BuiltinCall),
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    diagnostics: Vec<Diagnostic>,
    spans: HashMap<String, Pos>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn next(&mut self) -> &Token {
        let t = &self.tokens[self.at];
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn next_tok(&mut self) -> Tok {
        self.next().tok.clone()
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn span(&mut self, path: String, pos: Pos) {
        self.spans.insert(path, pos);
    }

    fn unexpected_at(&self, pos: Pos, found: &Tok, wanted: &str) -> Diagnostic {
        syntax(pos, format!("expected {wanted}, found {}", found.describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), Diagnostic> {
        let pos = self.pos();
        let found = self.next_tok();
        if found == tok {
            Ok(())
        } else {
            Err(self.unexpected_at(pos, &found, &tok.describe()))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, Diagnostic> {
        let pos = self.pos();
        match self.next_tok() {
            Tok::Ident(k) if k == kw => Ok(pos),
            other => Err(self.unexpected_at(pos, &other, &format!("`{kw}`"))),
        }
    }

    fn qname(&mut self) -> Result<Symbol, Diagnostic> {
        let pos = self.pos();
        match self.next_tok() {
            Tok::QName(q) => Symbol::new(q).map_err(|e| syntax(pos, e.to_string())),
            other => Err(self.unexpected_at(pos, &other, "a qualified name like `care:x`")),
        }
    }

    fn number(&mut self) -> Result<Number, Diagnostic> {
        let pos = self.pos();
        match self.next_tok() {
            Tok::Number(n) => Number::new(n).map_err(|e| syntax(pos, e.to_string())),
            other => Err(self.unexpected_at(pos, &other, "a number")),
        }
    }

    fn duration_value(&mut self, raw: &str, pos: Pos) -> DayTimeDuration {
        DayTimeDuration::parse(raw).unwrap_or_else(|_| {
            self.diagnostics.push(Diagnostic {
                line: pos.line,
                column: pos.column,
                category: Category::BadDuration,
                path: None,
                message: format!("{raw} is not a whole-second dayTimeDuration (P[nD][T[nH][nM][nS]])"),
            });
            DayTimeDuration::ZERO
        })
    }

    fn duration(&mut self) -> Result<DayTimeDuration, Diagnostic> {
        let pos = self.pos();
        match self.next_tok() {
            Tok::Duration(raw) => Ok(self.duration_value(&raw, pos)),
            other => Err(self.unexpected_at(pos, &other, "a duration like `P50D`")),
        }
    }

    fn term(&mut self) -> Result<Term, Diagnostic> {
        let pos = self.pos();
        Ok(match self.next_tok() {
            Tok::QName(q) => Term::Symbol(Symbol::new(q).map_err(|e| syntax(pos, e.to_string()))?),
            Tok::Var(v) => Term::Variable(Var::new(v).map_err(|e| syntax(pos, e.to_string()))?),
            Tok::Number(n) => Term::Number(Number::new(n).map_err(|e| syntax(pos, e.to_string()))?),
            Tok::Duration(raw) => Term::Duration(self.duration_value(&raw, pos)),
            Tok::Text(t) => Term::Text(t),
            other => return Err(self.unexpected_at(pos, &other, "a term")),
        })
    }

    fn statement(&mut self) -> Result<Statement, Diagnostic> {
        let subject = self.term()?;
        let pos = self.pos();
        match self.next_tok() {
            Tok::QName(q) => {
                let predicate = Symbol::new(q).map_err(|e| syntax(pos, e.to_string()))?;
                let object = self.term()?;
                Ok(Statement::Triple(TriplePattern::new(subject, predicate, object)))
            }
            Tok::Ident(name) => {
                let op = BuiltinOp::from_name(&name)
                    .ok_or_else(|| syntax(pos, format!("unknown builtin `{name}`")))?;
                let rhs = self.term()?;
                let result = if self.eat(&Tok::Arrow) {
                    let vpos = self.pos();
                    match self.next_tok() {
                        Tok::Var(v) => Some(Var::new(v).map_err(|e| syntax(vpos, e.to_string()))?),
                        other => return Err(self.unexpected_at(vpos, &other, "a result variable")),
                    }
                } else {
                    None
                };
                Ok(Statement::Guard(BuiltinCall { op, args: [subject, rhs], result }))
            }
            other => Err(self.unexpected_at(pos, &other, "a predicate or builtin")),
        }
    }

    /// `{ (statement .)* }`; the final `.` before `}` is optional.
    fn graph(&mut self, path: &str) -> Result<Pattern, Diagnostic> {
        self.span(path.to_string(), self.pos());
        self.expect(Tok::LBrace)?;
        let mut pattern = Pattern::default();
        while !self.eat(&Tok::RBrace) {
            let pos = self.pos();
            match self.statement()? {
                Statement::Triple(t) => {
                    self.span(format!("{path}.triples[{}]", pattern.triples.len()), pos);
                    pattern.triples.push(t);
                }
                Statement::Guard(g) => {
                    self.span(format!("{path}.guards[{}]", pattern.guards.len()), pos);
                    pattern.guards.push(g);
                }
            }
            if !self.eat(&Tok::Dot) && *self.peek() != Tok::RBrace {
                let pos = self.pos();
                let t = self.peek().clone();
                return Err(self.unexpected_at(pos, &t, "`.` or `}`"));
            }
        }
        Ok(pattern)
    }

    /// One ground statement; variables are reported and the statement dropped.
    fn fact_statement(&mut self) -> Result<Option<(Fact, Pos)>, Diagnostic> {
        let pos = self.pos();
        match self.statement()? {
            Statement::Triple(t) => match Fact::new(t.subject, t.predicate, t.object) {
                Ok(f) => Ok(Some((f, pos))),
                Err(_) => {
                    self.diagnostics.push(Diagnostic {
                        line: pos.line,
                        column: pos.column,
                        category: Category::UnboundVariable,
                        path: None,
                        message: "state facts must be ground".into(),
                    });
                    Ok(None)
                }
            },
            Statement::Guard(_) => Err(syntax(pos, "builtins are not allowed in a state block")),
        }
    }

    fn fact_block(&mut self) -> Result<Vec<(Fact, Pos)>, Diagnostic> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            out.extend(self.fact_statement()?);
            if !self.eat(&Tok::Dot) && *self.peek() != Tok::RBrace {
                let pos = self.pos();
                let t = self.peek().clone();
                return Err(self.unexpected_at(pos, &t, "`.` or `}`"));
            }
        }
        Ok(out)
    }

    fn transition(&mut self, map: &Symbol, path: &str) -> Result<TransitionDescription, Diagnostic> {
        let pos = self.keyword("transition")?;
        self.span(path.to_string(), pos);
        let apos = self.pos();
        let action = self.qname()?;
        self.span(format!("{path}.action"), apos);
        self.expect(Tok::LBrace)?;
        self.keyword("from")?;
        let from = self.graph(&format!("{path}.from"))?;
        self.keyword("during")?;
        let during = self.graph(&format!("{path}.during"))?;
        self.keyword("to")?;
        let to = self.graph(&format!("{path}.to"))?;

        let p = self.keyword("duration")?;
        self.span(format!("{path}.duration"), p);
        let duration = self.duration()?;
        let p = self.keyword("cost")?;
        self.span(format!("{path}.cost"), p);
        let cost = self.number()?;
        let p = self.keyword("belief")?;
        self.span(format!("{path}.belief"), p);
        let belief = self.number()?;
        let p = self.keyword("comfort")?;
        self.span(format!("{path}.comfort"), p);
        let comfort = self.number()?;

        self.keyword("condition")?;
        let condition = self.graph(&format!("{path}.condition"))?;
        self.expect(Tok::RBrace)?;
        Ok(TransitionDescription { map: map.clone(), action, from, during, to, condition, duration, cost, belief, comfort })
    }

    fn goal(&mut self, path: &str) -> Result<Goal, Diagnostic> {
        let ipos = self.pos();
        let id = self.qname()?;
        self.span(format!("{path}.id"), ipos);
        self.expect(Tok::LBrace)?;
        self.keyword("target")?;
        let target = self.graph(&format!("{path}.target"))?;
        self.keyword("limits")?;
        self.expect(Tok::LParen)?;
        self.span(format!("{path}.maxDuration"), self.pos());
        let max_duration = self.duration()?;
        self.span(format!("{path}.maxCost"), self.pos());
        let max_cost = self.number()?;
        self.span(format!("{path}.minBelief"), self.pos());
        let min_belief = self.number()?;
        self.span(format!("{path}.minComfort"), self.pos());
        let min_comfort = self.number()?;
        self.expect(Tok::RParen)?;
        let mut report = Vec::new();
        if matches!(self.peek(), Tok::Ident(k) if k == "report") {
            self.next();
            self.expect(Tok::LParen)?;
            loop {
                let vpos = self.pos();
                match self.next_tok() {
                    Tok::RParen => break,
                    Tok::Var(v) => {
                        self.span(format!("{path}.report[{}]", report.len()), vpos);
                        report.push(Var::new(v).map_err(|e| syntax(vpos, e.to_string()))?);
                    }
                    other => return Err(self.unexpected_at(vpos, &other, "a variable or `)`")),
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(Goal { id, target, max_duration, max_cost, min_belief, min_comfort, report })
    }
}
