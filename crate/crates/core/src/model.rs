//! Networks of timed automata, timed safety properties and their
//! well-formedness rules.
//!
//! Identifiers are dense indices into their owning container. Clocks live in
//! a network-wide namespace; every automaton declares the subset of clocks it
//! may constrain or reset.

use std::collections::BTreeSet;
use std::fmt;

use num::{BigRational, Signed, Zero};

pub type Rational = BigRational;

/// Integer as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocationId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AutomatonId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId(pub usize);

/// Comparison operators, in the fixed order `<, <=, ==, >=, >`. The position in
/// this order is the operator index used by operator variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub const ALL: [CmpOp; 5] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<CmpOp> {
        CmpOp::ALL.get(i).copied()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `clock op bound`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClockConstraint {
    pub clock: ClockId,
    pub op: CmpOp,
    pub bound: Rational,
}

impl ClockConstraint {
    pub fn new(clock: ClockId, op: CmpOp, bound: impl Into<Rational>) -> Self {
        ClockConstraint {
            clock,
            op,
            bound: bound.into(),
        }
    }

    pub fn holds(&self, value: &Rational) -> bool {
        self.op.holds(value, &self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sync {
    /// Fires alone. The optional action name is only observable when internal
    /// labels are made visible.
    Internal(Option<String>),
    Send(ChannelId),
    Receive(ChannelId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub source: LocationId,
    pub target: LocationId,
    pub sync: Sync,
    pub guard: Vec<ClockConstraint>,
    pub resets: Vec<ClockId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Location {
    pub name: String,
    pub urgent: bool,
    pub invariant: Vec<ClockConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Automaton {
    pub name: String,
    pub clocks: Vec<ClockId>,
    pub locations: Vec<Location>,
    pub initial: LocationId,
    pub transitions: Vec<Transition>,
}

impl Automaton {
    pub fn location(&self, id: LocationId) -> &Location {
        &self.locations[id.0]
    }

    pub fn location_by_name(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|l| l.name == name).map(LocationId)
    }

    pub fn owns_clock(&self, c: ClockId) -> bool {
        self.clocks.contains(&c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Network {
    pub clocks: Vec<String>,
    pub channels: Vec<String>,
    pub automata: Vec<Automaton>,
}

/// Where a clock constraint lives in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintSite {
    Invariant {
        automaton: AutomatonId,
        location: LocationId,
        position: usize,
    },
    Guard {
        automaton: AutomatonId,
        transition: usize,
        position: usize,
    },
}

impl ConstraintSite {
    pub fn automaton(&self) -> AutomatonId {
        match *self {
            ConstraintSite::Invariant { automaton, .. } | ConstraintSite::Guard { automaton, .. } => automaton,
        }
    }
}

impl Network {
    pub fn automaton(&self, id: AutomatonId) -> &Automaton {
        &self.automata[id.0]
    }

    pub fn automaton_by_name(&self, name: &str) -> Option<AutomatonId> {
        self.automata.iter().position(|a| a.name == name).map(AutomatonId)
    }

    pub fn clock_by_name(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId)
    }

    pub fn channel_by_name(&self, name: &str) -> Option<ChannelId> {
        self.channels.iter().position(|c| c == name).map(ChannelId)
    }

    pub fn clock_name(&self, c: ClockId) -> &str {
        &self.clocks[c.0]
    }

    pub fn location_name(&self, a: AutomatonId, l: LocationId) -> String {
        let aut = self.automaton(a);
        format!("{}.{}", aut.name, aut.location(l).name)
    }

    /// All clock constraints in document order: per automaton, first the
    /// location invariants, then the transition guards. The position in this
    /// sequence is the constraint's global index.
    pub fn constraint_sites(&self) -> Vec<ConstraintSite> {
        let mut out = Vec::new();
        for (ai, aut) in self.automata.iter().enumerate() {
            let automaton = AutomatonId(ai);
            for (li, loc) in aut.locations.iter().enumerate() {
                for position in 0..loc.invariant.len() {
                    out.push(ConstraintSite::Invariant {
                        automaton,
                        location: LocationId(li),
                        position,
                    });
                }
            }
            for (ti, t) in aut.transitions.iter().enumerate() {
                for position in 0..t.guard.len() {
                    out.push(ConstraintSite::Guard {
                        automaton,
                        transition: ti,
                        position,
                    });
                }
            }
        }
        out
    }

    pub fn constraint(&self, site: ConstraintSite) -> &ClockConstraint {
        match site {
            ConstraintSite::Invariant {
                automaton,
                location,
                position,
            } => &self.automata[automaton.0].locations[location.0].invariant[position],
            ConstraintSite::Guard {
                automaton,
                transition,
                position,
            } => &self.automata[automaton.0].transitions[transition].guard[position],
        }
    }

    pub fn constraint_mut(&mut self, site: ConstraintSite) -> &mut ClockConstraint {
        match site {
            ConstraintSite::Invariant {
                automaton,
                location,
                position,
            } => &mut self.automata[automaton.0].locations[location.0].invariant[position],
            ConstraintSite::Guard {
                automaton,
                transition,
                position,
            } => &mut self.automata[automaton.0].transitions[transition].guard[position],
        }
    }

    /// Global index of a constraint site.
    pub fn constraint_index(&self, site: ConstraintSite) -> Option<usize> {
        self.constraint_sites().iter().position(|s| *s == site)
    }

    pub fn initial_locations(&self) -> Vec<LocationId> {
        self.automata.iter().map(|a| a.initial).collect()
    }

    /// Largest constant over all clock constraints of the model.
    pub fn max_constant(&self) -> Rational {
        let mut m = Rational::zero();
        for site in self.constraint_sites() {
            let b = &self.constraint(site).bound;
            if *b > m {
                m = b.clone();
            }
        }
        m
    }

    pub fn has_urgent_locations(&self) -> bool {
        self.automata.iter().any(|a| a.locations.iter().any(|l| l.urgent))
    }
}

/// Timed safety property: a boolean combination of clock constraints and
/// location predicates. The obligation is that it holds in every reachable
/// state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Property {
    True,
    False,
    Clock(ClockConstraint),
    At(AutomatonId, LocationId),
    Not(Box<Property>),
    And(Box<Property>, Box<Property>),
    Or(Box<Property>, Box<Property>),
}

impl std::ops::Not for Property {
    type Output = Property;

    fn not(self) -> Property {
        Property::Not(Box::new(self))
    }
}

impl Property {
    pub fn and(a: Property, b: Property) -> Property {
        Property::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Property, b: Property) -> Property {
        Property::Or(Box::new(a), Box::new(b))
    }

    pub fn max_constant(&self) -> Rational {
        match self {
            Property::Clock(c) => c.bound.clone(),
            Property::Not(p) => p.max_constant(),
            Property::And(a, b) | Property::Or(a, b) => a.max_constant().max(b.max_constant()),
            _ => Rational::zero(),
        }
    }

    /// Evaluate with location predicates resolved against `locations` and
    /// clock atoms decided by `clock`.
    pub fn eval(&self, locations: &[LocationId], clock: &dyn Fn(&ClockConstraint) -> bool) -> bool {
        match self {
            Property::True => true,
            Property::False => false,
            Property::Clock(c) => clock(c),
            Property::At(a, l) => locations[a.0] == *l,
            Property::Not(p) => !p.eval(locations, clock),
            Property::And(a, b) => a.eval(locations, clock) && b.eval(locations, clock),
            Property::Or(a, b) => a.eval(locations, clock) || b.eval(locations, clock),
        }
    }

    /// Negation-normal form of `¬self` (or `self` when `negate` is false) as a
    /// disjunction of conjunctions of literals, with location predicates
    /// already resolved against `locations`.
    pub fn dnf(&self, negate: bool, locations: &[LocationId]) -> Vec<Vec<ClockConstraint>> {
        match (self, negate) {
            (Property::True, false) | (Property::False, true) => vec![vec![]],
            (Property::True, true) | (Property::False, false) => vec![],
            (Property::At(a, l), neg) => {
                if (locations[a.0] == *l) != neg {
                    vec![vec![]]
                } else {
                    vec![]
                }
            }
            (Property::Clock(c), false) => vec![vec![c.clone()]],
            (Property::Clock(c), true) => negate_constraint(c).into_iter().map(|c| vec![c]).collect(),
            (Property::Not(p), neg) => p.dnf(!neg, locations),
            (Property::And(a, b), false) | (Property::Or(a, b), true) => {
                let da = a.dnf(negate, locations);
                let db = b.dnf(negate, locations);
                let mut out = Vec::new();
                for x in &da {
                    for y in &db {
                        let mut t = x.clone();
                        t.extend(y.iter().cloned());
                        out.push(t);
                    }
                }
                out
            }
            (Property::Or(a, b), false) | (Property::And(a, b), true) => {
                let mut out = a.dnf(negate, locations);
                out.extend(b.dnf(negate, locations));
                out
            }
        }
    }

    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Property)) {
        f(self);
        match self {
            Property::Not(p) => p.visit(f),
            Property::And(a, b) | Property::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }
}

/// The complement of a single atom as a disjunction of atoms.
pub fn negate_constraint(c: &ClockConstraint) -> Vec<ClockConstraint> {
    let with = |op| ClockConstraint::new(c.clock, op, c.bound.clone());
    match c.op {
        CmpOp::Lt => vec![with(CmpOp::Ge)],
        CmpOp::Le => vec![with(CmpOp::Gt)],
        CmpOp::Ge => vec![with(CmpOp::Lt)],
        CmpOp::Gt => vec![with(CmpOp::Le)],
        CmpOp::Eq => vec![with(CmpOp::Lt), with(CmpOp::Gt)],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Warnings that do not make a network invalid.
pub fn warnings(network: &Network) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (ci, name) in network.channels.iter().enumerate() {
        let ch = ChannelId(ci);
        let has = |want_send: bool| {
            network.automata.iter().any(|a| {
                a.transitions.iter().any(|t| match t.sync {
                    Sync::Send(c) => want_send && c == ch,
                    Sync::Receive(c) => !want_send && c == ch,
                    Sync::Internal(_) => false,
                })
            })
        };
        if has(true) && !has(false) {
            out.push(Diagnostic {
                path: format!("channels[{ci}]"),
                message: format!("channel `{name}` is sent on but never received"),
            });
        }
    }
    out
}

/// Check every structural invariant of the network and the property.
/// Returns one diagnostic per violation; empty means well-formed.
pub fn validate(network: &Network, prop: &Property) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |path: String, message: String| out.push(Diagnostic { path, message });

    let mut seen = BTreeSet::new();
    for (i, c) in network.clocks.iter().enumerate() {
        if !seen.insert(c) {
            diag(format!("clocks[{i}]"), format!("duplicate clock name `{c}`"));
        }
    }
    let mut seen = BTreeSet::new();
    for (i, c) in network.channels.iter().enumerate() {
        if !seen.insert(c) {
            diag(format!("channels[{i}]"), format!("duplicate channel name `{c}`"));
        }
    }
    let mut seen = BTreeSet::new();
    for (ai, aut) in network.automata.iter().enumerate() {
        let base = format!("automata[{ai}]");
        if !seen.insert(&aut.name) {
            diag(base.clone(), format!("duplicate automaton name `{}`", aut.name));
        }
        if aut.initial.0 >= aut.locations.len() {
            diag(format!("{base}.initial"), "initial location does not exist".into());
        }
        for c in &aut.clocks {
            if c.0 >= network.clocks.len() {
                diag(format!("{base}.clocks"), format!("unknown clock id {}", c.0));
            }
        }
        let mut names = BTreeSet::new();
        for (li, loc) in aut.locations.iter().enumerate() {
            let lp = format!("{base}.locations[{li}]");
            if !names.insert(&loc.name) {
                diag(lp.clone(), format!("duplicate location name `{}`", loc.name));
            }
            for (k, atom) in loc.invariant.iter().enumerate() {
                check_atom(network, aut, atom, &format!("{lp}.invariant[{k}]"), &mut diag);
            }
        }
        for (ti, t) in aut.transitions.iter().enumerate() {
            let tp = format!("{base}.transitions[{ti}]");
            if t.source.0 >= aut.locations.len() {
                diag(tp.clone(), format!("transition {ti} has unknown source location"));
            }
            if t.target.0 >= aut.locations.len() {
                diag(tp.clone(), format!("transition {ti} has unknown target location"));
            }
            match t.sync {
                Sync::Send(c) | Sync::Receive(c) if c.0 >= network.channels.len() => {
                    diag(format!("{tp}.sync"), format!("transition {ti} uses an unknown channel"));
                }
                _ => {}
            }
            for (k, atom) in t.guard.iter().enumerate() {
                check_atom(network, aut, atom, &format!("{tp}.guard[{k}]"), &mut diag);
            }
            let mut rs = BTreeSet::new();
            for (k, r) in t.resets.iter().enumerate() {
                if !aut.owns_clock(*r) {
                    diag(format!("{tp}.resets[{k}]"), "reset of a clock not declared by the automaton".into());
                }
                if !rs.insert(r) {
                    diag(format!("{tp}.resets[{k}]"), "duplicate reset".into());
                }
            }
        }
    }

    let mut props = Vec::new();
    prop.visit(&mut |p| props.push(p));
    for p in props {
        match p {
            Property::Clock(c) => {
                if c.clock.0 >= network.clocks.len() {
                    diag("property".into(), "unresolved clock in property".into());
                }
                if c.bound.is_negative() {
                    diag("property".into(), "negative bound in property".into());
                }
            }
            Property::At(a, l) if a.0 >= network.automata.len() || l.0 >= network.automata[a.0].locations.len() => {
                diag("property".into(), "unresolved location predicate".into());
            }
            _ => {}
        }
    }
    out
}

fn check_atom(network: &Network, aut: &Automaton, atom: &ClockConstraint, path: &str, diag: &mut dyn FnMut(String, String)) {
    if atom.clock.0 >= network.clocks.len() {
        diag(path.to_string(), "unknown clock".into());
    } else if !aut.owns_clock(atom.clock) {
        diag(
            path.to_string(),
            format!(
                "clock `{}` is not declared by automaton `{}`",
                network.clocks[atom.clock.0], aut.name
            ),
        );
    }
    if atom.bound.is_negative() {
        diag(path.to_string(), "negative clock bound".into());
    }
}

/// Name of the fresh clock introduced for an automaton's urgent locations.
pub fn urgency_clock_name(network: &Network, automaton: &str) -> String {
    let mut name = format!("{automaton}_urgent");
    while network.clocks.contains(&name) {
        name.push('_');
    }
    name
}

/// Replace urgent flags by an extra clock per automaton that is reset on every
/// transition entering an urgent location and pinned to zero there.
pub fn desugar_urgency(network: &Network) -> Network {
    let mut out = network.clone();
    for ai in 0..network.automata.len() {
        let aut = &network.automata[ai];
        if !aut.locations.iter().any(|l| l.urgent) {
            continue;
        }
        let name = urgency_clock_name(&out, &aut.name);
        let p = ClockId(out.clocks.len());
        out.clocks.push(name);
        let aut = &mut out.automata[ai];
        aut.clocks.push(p);
        for t in aut.transitions.iter_mut() {
            if network.automata[ai].locations[t.target.0].urgent && !t.resets.contains(&p) {
                t.resets.push(p);
            }
        }
        for loc in aut.locations.iter_mut() {
            if loc.urgent {
                loc.urgent = false;
                loc.invariant.push(ClockConstraint::new(p, CmpOp::Eq, Rational::zero()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Network {
        Network {
            clocks: vec!["x".into()],
            channels: vec![],
            automata: vec![Automaton {
                name: "a".into(),
                clocks: vec![ClockId(0)],
                locations: vec![
                    Location {
                        name: "l0".into(),
                        urgent: false,
                        invariant: vec![],
                    },
                    Location {
                        name: "l1".into(),
                        urgent: true,
                        invariant: vec![],
                    },
                ],
                initial: LocationId(0),
                transitions: vec![
                    Transition {
                        source: LocationId(0),
                        target: LocationId(1),
                        sync: Sync::Internal(None),
                        guard: vec![],
                        resets: vec![],
                    },
                    Transition {
                        source: LocationId(1),
                        target: LocationId(1),
                        sync: Sync::Internal(None),
                        guard: vec![ClockConstraint::new(ClockId(0), CmpOp::Ge, int(1))],
                        resets: vec![],
                    },
                    Transition {
                        source: LocationId(1),
                        target: LocationId(0),
                        sync: Sync::Internal(None),
                        guard: vec![],
                        resets: vec![],
                    },
                ],
            }],
        }
    }

    #[test]
    fn unknown_target_is_reported_with_transition_index() {
        let mut n = tiny();
        n.automata[0].transitions[2].target = LocationId(9);
        let d = validate(&n, &Property::True);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("transition 2"), "{}", d[0]);
    }

    #[test]
    fn unresolved_location_predicate() {
        let n = tiny();
        let d = validate(&n, &!Property::At(AutomatonId(0), LocationId(7)));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "unresolved location predicate");
    }

    #[test]
    fn desugar_counts() {
        let n = tiny();
        assert!(validate(&n, &Property::True).is_empty());
        let d = desugar_urgency(&n);
        assert_eq!(d.clocks.len(), 2);
        let p = ClockId(1);
        let resets = d.automata[0].transitions.iter().filter(|t| t.resets.contains(&p)).count();
        assert_eq!(resets, 2);
        assert_eq!(d.automata[0].locations[1].invariant.len(), 1);
        assert!(!d.has_urgent_locations());
        assert!(validate(&d, &Property::True).is_empty());
    }

    #[test]
    fn desugar_without_urgency_is_identity() {
        let mut n = tiny();
        n.automata[0].locations[1].urgent = false;
        assert_eq!(desugar_urgency(&n), n);
    }

    #[test]
    fn dnf_of_negated_property() {
        // !(x <= 4 || !@a.l1) == x > 4 && @a.l1
        let p = Property::or(
            Property::Clock(ClockConstraint::new(ClockId(0), CmpOp::Le, int(4))),
            !Property::At(AutomatonId(0), LocationId(1)),
        );
        let at_l1 = p.dnf(true, &[LocationId(1)]);
        assert_eq!(at_l1, vec![vec![ClockConstraint::new(ClockId(0), CmpOp::Gt, int(4))]]);
        assert!(p.dnf(true, &[LocationId(0)]).is_empty());
    }

    #[test]
    fn operator_indices() {
        for (i, op) in CmpOp::ALL.iter().enumerate() {
            assert_eq!(op.index(), i);
            assert_eq!(CmpOp::from_index(i), Some(*op));
        }
        assert_eq!(CmpOp::Lt.index(), 0);
    }
}
