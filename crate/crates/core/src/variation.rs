//! Variation-extended constraint systems: each kind of syntactic change to the
//! network becomes a rational offset or a finite-domain selector.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::encode::{Block, Occurrence, TdtConstraintSystem};
use crate::lra::{hard_constraint, FmBudget, Formula, LinExpr, LinearAtom, Selector, Timeout, Var};
use crate::model::{AutomatonId, ClockId, CmpOp, ConstraintSite, LocationId, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariationKind {
    Bound,
    Operator,
    ClockRef,
    Reset,
    Urgency,
}

impl VariationKind {
    pub const ALL: [VariationKind; 5] = [
        VariationKind::Bound,
        VariationKind::Operator,
        VariationKind::ClockRef,
        VariationKind::Reset,
        VariationKind::Urgency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariationKind::Bound => "bound",
            VariationKind::Operator => "operator",
            VariationKind::ClockRef => "clockref",
            VariationKind::Reset => "reset",
            VariationKind::Urgency => "urgent",
        }
    }

    pub fn from_name(s: &str) -> Option<VariationKind> {
        VariationKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for VariationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The model element a variation variable modifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Anchor {
    Constraint { site: ConstraintSite, index: usize },
    Reset { step: usize, clock: ClockId },
    Urgency { automaton: AutomatonId, location: LocationId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarDomain {
    Rational(Var),
    /// Values `0..size`, selected through a selector.
    Finite {
        size: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariationVariable {
    pub id: usize,
    pub kind: VariationKind,
    pub anchor: Anchor,
    pub domain: VarDomain,
    /// The value meaning "unchanged" (0 for bounds).
    pub zero: u32,
    /// Clock choices of a clock-reference variable, by value.
    pub clocks: Vec<ClockId>,
}

impl VariationVariable {
    /// Values other than the neutral one.
    pub fn alternatives(&self) -> Vec<u32> {
        match self.domain {
            VarDomain::Rational(_) => vec![],
            VarDomain::Finite { size } => (0..size).filter(|v| *v != self.zero).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariedSystem {
    pub base: TdtConstraintSystem,
    pub kind: VariationKind,
    pub variables: Vec<VariationVariable>,
    /// Varied `𝒯`; variable `i` is `Selector(i)` when finite.
    pub formula: Formula,
    /// Side constraints on rational variables (bounds stay non-negative).
    pub domain: Vec<LinearAtom>,
}

fn selector(i: usize) -> Selector {
    Selector(i as u32)
}

/// Atoms of the blocks not in `replaced`.
fn kept_blocks(sys: &TdtConstraintSystem, replaced: &[Block]) -> Vec<Formula> {
    TdtConstraintSystem::BLOCKS
        .iter()
        .filter(|b| !replaced.contains(b))
        .flat_map(|b| sys.block(*b))
        .map(Formula::atom)
        .collect()
}

/// Model constraint indices on the trace, first occurrence order by index.
fn constraint_anchors(sys: &TdtConstraintSystem) -> Vec<(usize, ConstraintSite)> {
    let mut seen: BTreeMap<usize, ConstraintSite> = BTreeMap::new();
    for occ in &sys.occurrences {
        seen.entry(occ.index).or_insert(occ.site);
    }
    seen.into_iter().collect()
}

fn constraint_system(
    sys: &TdtConstraintSystem,
    kind: VariationKind,
    mut variable: impl FnMut(usize, usize, ConstraintSite) -> VariationVariable,
    mut vary: impl FnMut(&Occurrence, usize, &VariationVariable) -> Formula,
) -> VariedSystem {
    let anchors = constraint_anchors(sys);
    let variables: Vec<VariationVariable> = anchors
        .iter()
        .enumerate()
        .map(|(i, (idx, site))| variable(i, *idx, *site))
        .collect();
    let slot: BTreeMap<usize, usize> = anchors.iter().enumerate().map(|(i, (idx, _))| (*idx, i)).collect();
    let mut parts = kept_blocks(sys, &[Block::I, Block::G]);
    for occ in &sys.occurrences {
        let i = slot[&occ.index];
        parts.push(vary(occ, i, &variables[i]));
    }
    VariedSystem {
        base: sys.clone(),
        kind,
        variables,
        formula: Formula::and(parts),
        domain: vec![],
    }
}

/// `c ∼ β_i` becomes `c ∼ β_i + v_i`.
pub fn vary_bounds(sys: &TdtConstraintSystem) -> VariedSystem {
    let first = sys.first_free_var();
    let mut out = constraint_system(
        sys,
        VariationKind::Bound,
        |i, index, site| VariationVariable {
            id: index,
            kind: VariationKind::Bound,
            anchor: Anchor::Constraint { site, index },
            domain: VarDomain::Rational(Var(first + i as u32)),
            zero: 0,
            clocks: vec![],
        },
        |occ, i, _| {
            let c = &occ.constraint;
            let bound = LinExpr::constant(c.bound.clone()).plus(&LinExpr::var(Var(first + i as u32)));
            Formula::atom(sys.occurrence_atom(occ, c.clock, c.op, &bound))
        },
    );
    let mut seen = BTreeSet::new();
    for occ in &sys.occurrences {
        if seen.insert(occ.index) {
            let v = match out.variables.iter().find(|v| v.id == occ.index).unwrap().domain {
                VarDomain::Rational(v) => v,
                VarDomain::Finite { .. } => unreachable!(),
            };
            let b = LinExpr::constant(occ.constraint.bound.clone()).plus(&LinExpr::var(v));
            out.domain.push(LinearAtom::new(&b, CmpOp::Ge, &LinExpr::zero()));
        }
    }
    out
}

/// Each atom becomes an exclusive choice over the five operators.
pub fn vary_operators(sys: &TdtConstraintSystem) -> VariedSystem {
    constraint_system(
        sys,
        VariationKind::Operator,
        |_, index, site| VariationVariable {
            id: index,
            kind: VariationKind::Operator,
            anchor: Anchor::Constraint { site, index },
            domain: VarDomain::Finite { size: 5 },
            zero: sys
                .occurrences
                .iter()
                .find(|o| o.index == index)
                .map(|o| o.constraint.op.index() as u32)
                .unwrap(),
            clocks: vec![],
        },
        |occ, i, _| {
            let c = &occ.constraint;
            let bound = LinExpr::constant(c.bound.clone());
            Formula::or(
                CmpOp::ALL
                    .iter()
                    .enumerate()
                    .map(|(k, op)| {
                        Formula::and(vec![
                            Formula::Select(selector(i), k as u32),
                            Formula::atom(sys.occurrence_atom(occ, c.clock, *op, &bound)),
                        ])
                    })
                    .collect(),
            )
        },
    )
}

/// Each atom's clock becomes an exclusive choice over the clocks of the
/// automaton owning the constraint.
pub fn vary_clock_refs(network: &Network, sys: &TdtConstraintSystem) -> VariedSystem {
    constraint_system(
        sys,
        VariationKind::ClockRef,
        |_, index, site| {
            let clocks = network.automaton(site.automaton()).clocks.clone();
            let own = network.constraint(site).clock;
            VariationVariable {
                id: index,
                kind: VariationKind::ClockRef,
                anchor: Anchor::Constraint { site, index },
                domain: VarDomain::Finite { size: clocks.len() as u32 },
                zero: clocks.iter().position(|c| *c == own).expect("owned clock") as u32,
                clocks,
            }
        },
        |occ, i, var| {
            let c = &occ.constraint;
            let bound = LinExpr::constant(c.bound.clone());
            Formula::or(
                var.clocks
                    .iter()
                    .enumerate()
                    .map(|(k, clock)| {
                        Formula::and(vec![
                            Formula::Select(selector(i), k as u32),
                            Formula::atom(sys.occurrence_atom(occ, *clock, c.op, &bound)),
                        ])
                    })
                    .collect(),
            )
        },
    )
}

/// One flip per (step, clock) where toggling the reset can be applied to a
/// transition of that move: an existing reset, or a clock owned by one of
/// the moving automata. Flipped clocks stay explicit.
pub fn vary_resets(network: &Network, trace_moves: &[crate::zone::NetworkMove], sys: &TdtConstraintSystem) -> VariedSystem {
    let mut variables = Vec::new();
    for (j, mv) in trace_moves.iter().enumerate() {
        for c in 0..sys.clock_count {
            let clock = ClockId(c);
            let applicable = sys.resets[j].contains(&clock) || mv.parts().iter().any(|(a, _)| network.automaton(*a).owns_clock(clock));
            if applicable {
                variables.push(VariationVariable {
                    id: variables.len(),
                    kind: VariationKind::Reset,
                    anchor: Anchor::Reset { step: j, clock },
                    domain: VarDomain::Finite { size: 2 },
                    zero: 0,
                    clocks: vec![],
                });
            }
        }
    }
    let flipped: BTreeSet<ClockId> = variables
        .iter()
        .map(|v| match v.anchor {
            Anchor::Reset { clock, .. } => clock,
            _ => unreachable!(),
        })
        .collect();
    let explicit: BTreeSet<ClockId> = sys.explicit.union(&flipped).copied().collect();
    let base = sys.with_explicit(explicit);
    let mut parts = kept_blocks(&base, &[Block::R, Block::D]);
    let flip_of: BTreeMap<(usize, ClockId), usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| match v.anchor {
            Anchor::Reset { step, clock } => ((step, clock), i),
            _ => unreachable!(),
        })
        .collect();
    for j in 0..=base.steps {
        for c in &base.explicit {
            let reset = j < base.steps && base.resets[j].contains(c);
            let (as_is, toggled) = if reset {
                (base.reset_atom(*c, j), base.flow_atom(*c, j))
            } else {
                let r = if j < base.steps { Some(base.reset_atom(*c, j)) } else { None };
                match r {
                    Some(r) => (base.flow_atom(*c, j), r),
                    None => {
                        parts.push(Formula::atom(base.flow_atom(*c, j)));
                        continue;
                    }
                }
            };
            match flip_of.get(&(j, *c)) {
                Some(i) => parts.push(Formula::or(vec![
                    Formula::and(vec![Formula::Select(selector(*i), 0), Formula::atom(as_is)]),
                    Formula::and(vec![Formula::Select(selector(*i), 1), Formula::atom(toggled)]),
                ])),
                None => parts.push(Formula::atom(as_is)),
            }
        }
    }
    VariedSystem {
        base,
        kind: VariationKind::Reset,
        variables,
        formula: Formula::and(parts),
        domain: vec![],
    }
}

/// One flip per distinct location visited on the trace; a step is urgent iff
/// one of its locations is urgent after flipping.
pub fn vary_urgency(network: &Network, sys: &TdtConstraintSystem) -> VariedSystem {
    let mut anchors: Vec<(AutomatonId, LocationId)> = Vec::new();
    for locs in &sys.locations {
        for (a, l) in locs.iter().enumerate() {
            if !anchors.contains(&(AutomatonId(a), *l)) {
                anchors.push((AutomatonId(a), *l));
            }
        }
    }
    anchors.sort();
    let variables: Vec<VariationVariable> = anchors
        .iter()
        .enumerate()
        .map(|(i, (automaton, location))| VariationVariable {
            id: i,
            kind: VariationKind::Urgency,
            anchor: Anchor::Urgency {
                automaton: *automaton,
                location: *location,
            },
            domain: VarDomain::Finite { size: 2 },
            zero: 0,
            clocks: vec![],
        })
        .collect();
    let mut parts = kept_blocks(sys, &[Block::U]);
    for (j, locs) in sys.locations.iter().enumerate() {
        // not urgent after flipping, or no delay
        let mut lazy = Vec::new();
        for (a, l) in locs.iter().enumerate() {
            let i = anchors.iter().position(|x| *x == (AutomatonId(a), *l)).unwrap();
            let urgent = network.automata[a].location(*l).urgent;
            lazy.push(Formula::Select(selector(i), if urgent { 1 } else { 0 }));
        }
        let no_delay = Formula::atom(LinearAtom::new(&LinExpr::var(sys.delay(j)), CmpOp::Eq, &LinExpr::zero()));
        parts.push(Formula::or(vec![Formula::and(lazy), no_delay]));
    }
    VariedSystem {
        base: sys.clone(),
        kind: VariationKind::Urgency,
        variables,
        formula: Formula::and(parts),
        domain: vec![],
    }
}

pub fn vary(network: &Network, trace: &crate::zone::SymbolicTrace, sys: &TdtConstraintSystem, kind: VariationKind) -> VariedSystem {
    match kind {
        VariationKind::Bound => vary_bounds(sys),
        VariationKind::Operator => vary_operators(sys),
        VariationKind::ClockRef => vary_clock_refs(network, sys),
        VariationKind::Reset => vary_resets(network, &trace.moves, sys),
        VariationKind::Urgency => vary_urgency(network, sys),
    }
}

impl VariedSystem {
    pub fn rational_vars(&self) -> Vec<Var> {
        self.variables
            .iter()
            .filter_map(|v| match v.domain {
                VarDomain::Rational(x) => Some(x),
                VarDomain::Finite { .. } => None,
            })
            .collect()
    }

    /// Full selector assignment: listed variables take their value, the
    /// other finite ones stay neutral.
    pub fn selection(&self, chosen: &BTreeMap<usize, u32>) -> BTreeMap<Selector, u32> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| matches!(v.domain, VarDomain::Finite { .. }))
            .map(|(i, v)| (selector(i), chosen.get(&i).copied().unwrap_or(v.zero)))
            .collect()
    }

    /// The varied system with every selector fixed, as a conjunction.
    pub fn branch(&self, chosen: &BTreeMap<usize, u32>) -> Vec<LinearAtom> {
        let f = self.formula.restrict(&self.selection(chosen));
        f.as_conjunction().expect("fully selected system is conjunctive")
    }

    /// Rational variables pinned to zero unless in `free`.
    pub fn zero_atoms(&self, free: &BTreeSet<usize>) -> Vec<LinearAtom> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(i, _)| !free.contains(i))
            .filter_map(|(_, v)| match v.domain {
                VarDomain::Rational(x) => Some(LinearAtom::new(&LinExpr::var(x), CmpOp::Eq, &LinExpr::zero())),
                VarDomain::Finite { .. } => None,
            })
            .collect()
    }

    /// The system with every variation variable at its neutral value.
    pub fn neutral(&self) -> Vec<LinearAtom> {
        let mut atoms = self.branch(&BTreeMap::new());
        atoms.extend(self.zero_atoms(&BTreeSet::new()));
        atoms
    }

    /// Hard constraint over the rational variables for one selector branch.
    pub fn hard_constraint(&self, chosen: &BTreeMap<usize, u32>, budget: FmBudget) -> Result<Formula, Timeout> {
        let system = self.branch(chosen);
        let h = hard_constraint(&system, &self.base.violation_atoms(), &self.base.trace_vars(), budget)?;
        let mut parts = vec![h];
        parts.extend(self.domain.iter().cloned().map(Formula::atom));
        Ok(Formula::and(parts))
    }
}
