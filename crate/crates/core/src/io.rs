//! Text formats: the JSON model document, the clock-constraint and property
//! grammar embedded in it, and the JSON trace document.
//!
//! Bounds are printed as naturals or as `p/q` strings so that repaired models
//! round-trip without precision loss.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate, Automaton, AutomatonId, ClockConstraint, CmpOp, Diagnostic, Location, LocationId, Network, Property, Rational, Sync,
    Transition,
};
use crate::zone::{NetworkMove, SymbolicTrace};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}:{column}: syntax error: {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

// ---------------------------------------------------------------------------
// Constraint and property grammar

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(Rational),
    Op(CmpOp),
    At,
    Dot,
    Not,
    And,
    Or,
    LParen,
    RParen,
}

#[derive(Debug)]
struct Lexeme {
    tok: Tok,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrammarError {
    /// 1-based column inside the parsed string.
    pub column: usize,
    pub message: String,
}

fn lex(text: &str) -> Result<Vec<Lexeme>, GrammarError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let err = |m: &str| GrammarError {
            column,
            message: m.to_string(),
        };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let (tok, len) = match two.as_str() {
            "<=" => (Tok::Op(CmpOp::Le), 2),
            ">=" => (Tok::Op(CmpOp::Ge), 2),
            "==" => (Tok::Op(CmpOp::Eq), 2),
            "&&" => (Tok::And, 2),
            "||" => (Tok::Or, 2),
            _ => match c {
                '<' => (Tok::Op(CmpOp::Lt), 1),
                '>' => (Tok::Op(CmpOp::Gt), 1),
                '=' => (Tok::Op(CmpOp::Eq), 1),
                '@' => (Tok::At, 1),
                '.' => (Tok::Dot, 1),
                '!' => (Tok::Not, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                d if d.is_ascii_digit() => {
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '/') {
                        j += 1;
                    }
                    let s: String = chars[i..j].iter().collect();
                    let r = parse_rational(&s).ok_or_else(|| err(&format!("malformed number `{s}`")))?;
                    (Tok::Number(r), j - i)
                }
                a if a.is_alphabetic() || a == '_' => {
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    (Tok::Ident(chars[i..j].iter().collect()), j - i)
                }
                other => return Err(err(&format!("unexpected character `{other}`"))),
            },
        };
        out.push(Lexeme { tok, column });
        i += len;
    }
    Ok(out)
}

/// Parse `p` or `p/q` (non-negative).
pub fn parse_rational(s: &str) -> Option<Rational> {
    let mut parts = s.split('/');
    let p: num::BigInt = parts.next()?.parse().ok()?;
    let q: num::BigInt = match parts.next() {
        Some(q) => q.parse().ok()?,
        None => num::BigInt::one(),
    };
    if parts.next().is_some() || q.is_zero() {
        return None;
    }
    Some(Rational::new(p, q))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

struct Parser<'a> {
    toks: Vec<Lexeme>,
    pos: usize,
    end: usize,
    network: &'a Network,
    /// Automaton whose clocks an atom may use; `None` for properties.
    clock_scope: Option<&'a Automaton>,
}

impl<'a> Parser<'a> {
    fn new(text: &str, network: &'a Network, clock_scope: Option<&'a Automaton>) -> Result<Self, GrammarError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            end: text.chars().count() + 1,
            network,
            clock_scope,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |l| l.column)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, GrammarError> {
        Err(GrammarError {
            column: self.column(),
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|l| l.tok.clone());
        self.pos += 1;
        t
    }

    fn finish(&self) -> Result<(), GrammarError> {
        if self.pos < self.toks.len() {
            return self.fail("unexpected trailing input");
        }
        Ok(())
    }

    fn atom(&mut self) -> Result<ClockConstraint, GrammarError> {
        let name = match self.peek() {
            Some(Tok::Ident(n)) => n.clone(),
            _ => return self.fail("expected a clock name"),
        };
        let clock = match self.network.clock_by_name(&name) {
            Some(c) => c,
            None => return self.fail(format!("unknown clock `{name}`")),
        };
        if let Some(aut) = self.clock_scope {
            if !aut.owns_clock(clock) {
                return self.fail(format!("clock `{name}` is not declared by automaton `{}`", aut.name));
            }
        }
        self.pos += 1;
        let op = match self.peek() {
            Some(Tok::Op(op)) => *op,
            _ => return self.fail("expected a comparison operator"),
        };
        self.pos += 1;
        let bound = match self.peek() {
            Some(Tok::Number(r)) => r.clone(),
            _ => return self.fail("expected a natural or rational bound"),
        };
        self.pos += 1;
        Ok(ClockConstraint::new(clock, op, bound))
    }

    fn disjunction(&mut self) -> Result<Property, GrammarError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Property::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Property, GrammarError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Property::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Property, GrammarError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(!self.unary()?)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.disjunction()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::At) => {
                self.pos += 1;
                let aut_name = match self.next() {
                    Some(Tok::Ident(n)) => n,
                    _ => {
                        self.pos -= 1;
                        return self.fail("expected an automaton name after `@`");
                    }
                };
                if self.next() != Some(Tok::Dot) {
                    self.pos -= 1;
                    return self.fail("expected `.` in location predicate");
                }
                let loc_name = match self.next() {
                    Some(Tok::Ident(n)) => n,
                    _ => {
                        self.pos -= 1;
                        return self.fail("expected a location name");
                    }
                };
                let Some(a) = self.network.automaton_by_name(&aut_name) else {
                    self.pos -= 3;
                    return self.fail(format!("unresolved location predicate @{aut_name}.{loc_name}"));
                };
                let Some(l) = self.network.automaton(a).location_by_name(&loc_name) else {
                    self.pos -= 3;
                    return self.fail(format!("unresolved location predicate @{aut_name}.{loc_name}"));
                };
                Ok(Property::At(a, l))
            }
            Some(Tok::Ident(n)) if n == "true" => {
                self.pos += 1;
                Ok(Property::True)
            }
            Some(Tok::Ident(n)) if n == "false" => {
                self.pos += 1;
                Ok(Property::False)
            }
            _ => Ok(Property::Clock(self.atom()?)),
        }
    }
}

/// Parse a single `clock OP bound` atom. `scope` restricts the usable clocks
/// to those declared by an automaton.
pub fn parse_constraint(text: &str, network: &Network, scope: Option<&Automaton>) -> Result<ClockConstraint, GrammarError> {
    let mut p = Parser::new(text, network, scope)?;
    let atom = p.atom()?;
    p.finish()?;
    Ok(atom)
}

pub fn parse_property(text: &str, network: &Network) -> Result<Property, GrammarError> {
    let mut p = Parser::new(text, network, None)?;
    if p.toks.is_empty() {
        return p.fail("empty property");
    }
    let prop = p.disjunction()?;
    p.finish()?;
    Ok(prop)
}

pub fn format_constraint(network: &Network, c: &ClockConstraint) -> String {
    format!("{} {} {}", network.clock_name(c.clock), c.op, format_rational(&c.bound))
}

pub fn format_property(network: &Network, p: &Property) -> String {
    fn go(n: &Network, p: &Property, prec: u8, out: &mut String) {
        // precedence: 0 = or, 1 = and, 2 = unary
        match p {
            Property::True => out.push_str("true"),
            Property::False => out.push_str("false"),
            Property::Clock(c) => out.push_str(&format_constraint(n, c)),
            Property::At(a, l) => {
                let aut = n.automaton(*a);
                let _ = write!(out, "@{}.{}", aut.name, aut.location(*l).name);
            }
            Property::Not(inner) => {
                out.push('!');
                go(n, inner, 2, out);
            }
            Property::And(a, b) | Property::Or(a, b) => {
                let (mine, sym) = if matches!(p, Property::And(..)) { (1, " && ") } else { (0, " || ") };
                if prec > mine {
                    out.push('(');
                }
                go(n, a, mine, out);
                out.push_str(sym);
                go(n, b, mine + 1, out);
                if prec > mine {
                    out.push(')');
                }
            }
        }
    }
    let mut out = String::new();
    go(network, p, 0, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Model document

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelDocument {
    pub channels: Vec<String>,
    pub automata: Vec<AutomatonDocument>,
    pub property: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AutomatonDocument {
    pub name: String,
    pub initial: String,
    pub clocks: Vec<String>,
    pub locations: Vec<LocationDocument>,
    pub transitions: Vec<TransitionDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LocationDocument {
    pub name: String,
    #[serde(default)]
    pub urgent: bool,
    #[serde(default)]
    pub invariant: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TransitionDocument {
    pub source: String,
    pub target: String,
    /// `chan!`, `chan?`, a bare action name for a labelled internal
    /// transition, or absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync: Option<String>,
    #[serde(default)]
    pub guard: Vec<String>,
    #[serde(default)]
    pub resets: Vec<String>,
}

fn syntax(path: impl Into<String>, column: usize, message: impl Into<String>) -> IoError {
    IoError::Syntax {
        path: path.into(),
        line: 1,
        column,
        message: message.into(),
    }
}

impl ModelDocument {
    pub fn to_network(&self) -> Result<(Network, Property), IoError> {
        let mut clocks: Vec<String> = Vec::new();
        for a in &self.automata {
            for c in &a.clocks {
                if !clocks.contains(c) {
                    clocks.push(c.clone());
                }
            }
        }
        let mut network = Network {
            clocks,
            channels: self.channels.clone(),
            automata: Vec::new(),
        };
        // Locations first so that later lookups can resolve names.
        for (ai, a) in self.automata.iter().enumerate() {
            let initial = a
                .locations
                .iter()
                .position(|l| l.name == a.initial)
                .ok_or_else(|| syntax(format!("automata[{ai}].initial"), 1, format!("unknown location `{}`", a.initial)))?;
            network.automata.push(Automaton {
                name: a.name.clone(),
                clocks: a.clocks.iter().map(|c| network.clock_by_name(c).expect("collected")).collect(),
                locations: a
                    .locations
                    .iter()
                    .map(|l| Location {
                        name: l.name.clone(),
                        urgent: l.urgent,
                        invariant: Vec::new(),
                    })
                    .collect(),
                initial: LocationId(initial),
                transitions: Vec::new(),
            });
        }
        for (ai, a) in self.automata.iter().enumerate() {
            let mut invariants = Vec::new();
            for (li, l) in a.locations.iter().enumerate() {
                let mut inv = Vec::new();
                for (k, s) in l.invariant.iter().enumerate() {
                    let path = format!("automata[{ai}].locations[{li}].invariant[{k}]");
                    let c = parse_constraint(s, &network, Some(&network.automata[ai])).map_err(|e| syntax(path, e.column, e.message))?;
                    inv.push(c);
                }
                invariants.push(inv);
            }
            let mut transitions = Vec::new();
            for (ti, t) in a.transitions.iter().enumerate() {
                let tp = format!("automata[{ai}].transitions[{ti}]");
                let aut = &network.automata[ai];
                let loc = |n: &str, field: &str| {
                    aut.location_by_name(n)
                        .ok_or_else(|| syntax(format!("{tp}.{field}"), 1, format!("unknown location `{n}`")))
                };
                let source = loc(&t.source, "source")?;
                let target = loc(&t.target, "target")?;
                let sync = match &t.sync {
                    None => Sync::Internal(None),
                    Some(s) => {
                        let chan = |name: &str| {
                            network
                                .channel_by_name(name)
                                .ok_or_else(|| syntax(format!("{tp}.sync"), 1, format!("unknown channel `{name}`")))
                        };
                        if let Some(c) = s.strip_suffix('!') {
                            Sync::Send(chan(c)?)
                        } else if let Some(c) = s.strip_suffix('?') {
                            Sync::Receive(chan(c)?)
                        } else if s.is_empty() {
                            Sync::Internal(None)
                        } else {
                            Sync::Internal(Some(s.clone()))
                        }
                    }
                };
                let mut guard = Vec::new();
                for (k, s) in t.guard.iter().enumerate() {
                    let c =
                        parse_constraint(s, &network, Some(aut)).map_err(|e| syntax(format!("{tp}.guard[{k}]"), e.column, e.message))?;
                    guard.push(c);
                }
                let mut resets = Vec::new();
                for (k, r) in t.resets.iter().enumerate() {
                    let c = network
                        .clock_by_name(r)
                        .ok_or_else(|| syntax(format!("{tp}.resets[{k}]"), 1, format!("unknown clock `{r}`")))?;
                    resets.push(c);
                }
                transitions.push(Transition {
                    source,
                    target,
                    sync,
                    guard,
                    resets,
                });
            }
            let aut = &mut network.automata[ai];
            for (loc, inv) in aut.locations.iter_mut().zip(invariants) {
                loc.invariant = inv;
            }
            aut.transitions = transitions;
        }
        let property = parse_property(&self.property, &network).map_err(|e| syntax("property", e.column, e.message))?;
        let diagnostics = validate(&network, &property);
        if !diagnostics.is_empty() {
            return Err(IoError::Invalid(diagnostics));
        }
        Ok((network, property))
    }

    pub fn from_network(network: &Network, property: &Property) -> ModelDocument {
        ModelDocument {
            channels: network.channels.clone(),
            automata: network
                .automata
                .iter()
                .map(|a| AutomatonDocument {
                    name: a.name.clone(),
                    initial: a.location(a.initial).name.clone(),
                    clocks: a.clocks.iter().map(|c| network.clock_name(*c).to_string()).collect(),
                    locations: a
                        .locations
                        .iter()
                        .map(|l| LocationDocument {
                            name: l.name.clone(),
                            urgent: l.urgent,
                            invariant: l.invariant.iter().map(|c| format_constraint(network, c)).collect(),
                        })
                        .collect(),
                    transitions: a
                        .transitions
                        .iter()
                        .map(|t| TransitionDocument {
                            source: a.location(t.source).name.clone(),
                            target: a.location(t.target).name.clone(),
                            sync: match &t.sync {
                                Sync::Internal(None) => None,
                                Sync::Internal(Some(n)) => Some(n.clone()),
                                Sync::Send(c) => Some(format!("{}!", network.channels[c.0])),
                                Sync::Receive(c) => Some(format!("{}?", network.channels[c.0])),
                            },
                            guard: t.guard.iter().map(|c| format_constraint(network, c)).collect(),
                            resets: t.resets.iter().map(|c| network.clock_name(*c).to_string()).collect(),
                        })
                        .collect(),
                })
                .collect(),
            property: format_property(network, property),
        }
    }
}

/// Parse and validate a model document.
pub fn parse_model(text: &str) -> Result<(Network, Property), IoError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| IoError::Syntax {
        path: "<document>".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_network()
}

pub fn serialize_model(network: &Network, property: &Property) -> String {
    let doc = ModelDocument::from_network(network, property);
    let mut s = serde_json::to_string_pretty(&doc).expect("model documents always serialize");
    s.push('\n');
    s
}

pub fn read_model(path: &Path) -> Result<(Network, Property), IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text)
}

pub fn write_file(path: &Path, contents: &str) -> Result<PathBuf, IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| IoError::File {
                path: dir.to_path_buf(),
                source,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

// ---------------------------------------------------------------------------
// Trace document

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceDocument {
    pub initial: Vec<String>,
    #[serde(rename = "final")]
    pub final_locations: Vec<String>,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub fired: Vec<FiredTransition>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FiredTransition {
    pub automaton: String,
    #[serde(rename = "transitionIndex")]
    pub transition_index: usize,
}

fn location_names(network: &Network, locs: &[LocationId]) -> Vec<String> {
    locs.iter()
        .enumerate()
        .map(|(a, l)| network.location_name(AutomatonId(a), *l))
        .collect()
}

impl TraceDocument {
    pub fn from_trace(network: &Network, trace: &SymbolicTrace) -> TraceDocument {
        TraceDocument {
            initial: location_names(network, &trace.locations[0]),
            final_locations: location_names(network, trace.locations.last().expect("nonempty")),
            steps: trace
                .moves
                .iter()
                .map(|m| TraceStep {
                    delay: None,
                    label: m.label(network),
                    fired: m
                        .parts()
                        .iter()
                        .map(|(a, t)| FiredTransition {
                            automaton: network.automaton(*a).name.clone(),
                            transition_index: *t,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// A label-only witness (no transitions).
    pub fn from_labels(labels: &[String]) -> TraceDocument {
        TraceDocument {
            initial: vec![],
            final_locations: vec![],
            steps: labels
                .iter()
                .map(|l| TraceStep {
                    delay: None,
                    label: Some(l.clone()),
                    fired: vec![],
                })
                .collect(),
        }
    }

    /// Rebuild and check the symbolic trace against a network.
    pub fn to_trace(&self, network: &Network) -> Result<SymbolicTrace, IoError> {
        let mut locs = network.initial_locations();
        let mut locations = vec![locs.clone()];
        let mut moves = Vec::new();
        for (si, step) in self.steps.iter().enumerate() {
            let mut parts = Vec::new();
            for f in &step.fired {
                let a = network
                    .automaton_by_name(&f.automaton)
                    .ok_or_else(|| IoError::Trace(format!("step {si}: unknown automaton `{}`", f.automaton)))?;
                if f.transition_index >= network.automaton(a).transitions.len() {
                    return Err(IoError::Trace(format!("step {si}: transition index out of range")));
                }
                parts.push((a, f.transition_index));
            }
            let mv = NetworkMove::from_parts(network, &parts)
                .ok_or_else(|| IoError::Trace(format!("step {si}: fired transitions do not form a network move")))?;
            for (a, t) in mv.parts() {
                let tr = &network.automaton(a).transitions[t];
                if locs[a.0] != tr.source {
                    return Err(IoError::Trace(format!(
                        "step {si}: transition {t} of `{}` does not start in the current location",
                        network.automaton(a).name
                    )));
                }
                locs[a.0] = tr.target;
            }
            moves.push(mv);
            locations.push(locs.clone());
        }
        let fin = location_names(network, &locs);
        if !self.final_locations.is_empty() && fin != self.final_locations {
            return Err(IoError::Trace("final location vector does not match the fired transitions".into()));
        }
        let init = location_names(network, &locations[0]);
        if !self.initial.is_empty() && init != self.initial {
            return Err(IoError::Trace("initial location vector does not match the network".into()));
        }
        Ok(SymbolicTrace { moves, locations })
    }
}

pub fn serialize_trace(doc: &TraceDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("trace documents always serialize");
    s.push('\n');
    s
}

pub fn parse_trace(text: &str) -> Result<TraceDocument, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Syntax {
        path: "<trace>".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = r#"{
  "channels": ["go"],
  "automata": [
    {"name": "a", "initial": "l0", "clocks": ["x"],
     "locations": [{"name": "l0", "invariant": ["x <= 2"]}, {"name": "l1", "urgent": true}],
     "transitions": [{"source": "l0", "target": "l1", "sync": "go!", "guard": ["x >= 1"], "resets": ["x"]}]},
    {"name": "b", "initial": "m0", "clocks": ["y"],
     "locations": [{"name": "m0"}],
     "transitions": [{"source": "m0", "target": "m0", "sync": "go?", "guard": ["y == 3/2"]}]}
  ],
  "property": "x <= 4 || !@a.l1"
}"#;

    #[test]
    fn parses_and_round_trips() {
        let (n, p) = parse_model(MODEL).unwrap();
        assert_eq!(n.clocks, vec!["x", "y"]);
        assert_eq!(n.automata[1].transitions[0].guard[0].bound, Rational::new(3.into(), 2.into()));
        let text = serialize_model(&n, &p);
        let (n2, p2) = parse_model(&text).unwrap();
        assert_eq!(n, n2);
        assert_eq!(p, p2);
        assert_eq!(serialize_model(&n2, &p2), text);
        assert!(text.contains("\"x <= 4 || !@a.l1\""));
    }

    #[test]
    fn doubled_operator_is_a_syntax_error_at_the_token() {
        let bad = MODEL.replace("\"x >= 1\"", "\"x <== 2\"");
        match parse_model(&bad) {
            Err(IoError::Syntax { path, column, .. }) => {
                assert_eq!(path, "automata[0].transitions[0].guard[0]");
                assert_eq!(column, 5);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unresolved_location_in_property() {
        let bad = MODEL.replace("!@a.l1", "!@a.nowhere");
        let err = parse_model(&bad).unwrap_err();
        assert!(err.to_string().contains("unresolved location predicate"), "{err}");
    }

    #[test]
    fn property_printing_respects_precedence() {
        let (n, _) = parse_model(MODEL).unwrap();
        for src in [
            "(x <= 1 || x > 3) && @a.l0",
            "!(x <= 1 && y < 2)",
            "x <= 1 || x > 3 && @a.l0",
            "true",
        ] {
            let p = parse_property(src, &n).unwrap();
            let printed = format_property(&n, &p);
            assert_eq!(parse_property(&printed, &n).unwrap(), p, "{src} -> {printed}");
        }
        let p = parse_property("(x <= 1 || x > 3) && @a.l0", &n).unwrap();
        assert_eq!(format_property(&n, &p), "(x <= 1 || x > 3) && @a.l0");
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("4/6"), Some(Rational::new(2.into(), 3.into())));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(format_rational(&Rational::new(6.into(), 3.into())), "2");
        assert_eq!(format_rational(&Rational::new(1.into(), 2.into())), "1/2");
    }
}
