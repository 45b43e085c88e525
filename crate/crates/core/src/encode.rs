//! Encoding of a symbolic trace as a linear constraint system over its delays.
//!
//! Step `j` of an `n`-move trace sojourns `δ_j` time units in `λ_j` and then
//! fires move `j` (the last sojourn `δ_n` is trailing). Clock `c` at step `j`
//! is either an explicit variable `c_j` or, after elimination, the sum of the
//! delays since its last reset.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::lra::{is_satisfiable, FmBudget, Formula, LinExpr, LinearAtom, Timeout, Var};
use crate::model::{ClockConstraint, ClockId, CmpOp, ConstraintSite, LocationId, Network, Property, Rational};
use crate::zone::SymbolicTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    /// clock initialization
    C0,
    /// time advancement
    A,
    /// clock resets
    R,
    /// urgent locations
    U,
    /// sojourn time
    D,
    /// location invariants
    I,
    /// transition guards
    G,
}

/// One use of a model constraint along the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub site: ConstraintSite,
    /// Global constraint index.
    pub index: usize,
    pub step: usize,
    /// `c_j + δ_j` when set, `c_j` otherwise. Guards are always read on exit,
    /// invariants on both entry and exit.
    pub exit: bool,
    pub constraint: ClockConstraint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdtConstraintSystem {
    /// Number of moves `n`.
    pub steps: usize,
    pub clock_count: usize,
    pub locations: Vec<Vec<LocationId>>,
    /// Clocks reset by move `j`, for `j < n`.
    pub resets: Vec<BTreeSet<ClockId>>,
    /// `λ_j` contains an urgent location, for `j ≤ n`.
    pub urgent: Vec<bool>,
    pub occurrences: Vec<Occurrence>,
    /// Disjunctive normal form of the negated property, read at `n + 1`.
    pub violation: Vec<Vec<ClockConstraint>>,
    /// Clocks kept as explicit per-step variables.
    pub explicit: BTreeSet<ClockId>,
}

pub fn encode(network: &Network, trace: &SymbolicTrace, prop: &Property) -> TdtConstraintSystem {
    let n = trace.len();
    let sites = network.constraint_sites();
    let index_of = |s: &ConstraintSite| sites.iter().position(|t| t == s).expect("site of this network");
    let mut occurrences = Vec::new();
    let mut urgent = Vec::with_capacity(n + 1);
    for (j, locs) in trace.locations.iter().enumerate() {
        urgent.push(locs.iter().enumerate().any(|(a, l)| network.automata[a].location(*l).urgent));
        for (a, l) in locs.iter().enumerate() {
            for (position, c) in network.automata[a].location(*l).invariant.iter().enumerate() {
                let site = ConstraintSite::Invariant {
                    automaton: crate::model::AutomatonId(a),
                    location: *l,
                    position,
                };
                for exit in [false, true] {
                    occurrences.push(Occurrence {
                        site,
                        index: index_of(&site),
                        step: j,
                        exit,
                        constraint: c.clone(),
                    });
                }
            }
        }
        if j < n {
            for (a, t) in trace.moves[j].parts() {
                for (position, c) in network.automaton(a).transitions[t].guard.iter().enumerate() {
                    let site = ConstraintSite::Guard {
                        automaton: a,
                        transition: t,
                        position,
                    };
                    occurrences.push(Occurrence {
                        site,
                        index: index_of(&site),
                        step: j,
                        exit: true,
                        constraint: c.clone(),
                    });
                }
            }
        }
    }
    let resets = trace
        .moves
        .iter()
        .map(|mv| {
            mv.parts()
                .into_iter()
                .flat_map(|(a, t)| network.automaton(a).transitions[t].resets.iter().copied())
                .collect()
        })
        .collect();
    TdtConstraintSystem {
        steps: n,
        clock_count: network.clocks.len(),
        locations: trace.locations.clone(),
        resets,
        urgent,
        occurrences,
        violation: prop.dnf(true, trace.final_locations()),
        explicit: (0..network.clocks.len()).map(ClockId).collect(),
    }
}

impl TdtConstraintSystem {
    pub fn delay(&self, j: usize) -> Var {
        Var(j as u32)
    }

    pub fn delays(&self) -> Vec<Var> {
        (0..=self.steps).map(|j| self.delay(j)).collect()
    }

    pub fn clock_var(&self, c: ClockId, j: usize) -> Var {
        Var((self.steps + 1 + c.0 * (self.steps + 2) + j) as u32)
    }

    /// First variable index not used by delays or clock variables.
    pub fn first_free_var(&self) -> u32 {
        (self.steps + 1 + self.clock_count * (self.steps + 2)) as u32
    }

    /// Step at which `c` was last set to zero before step `j`.
    pub fn last_reset(&self, c: ClockId, j: usize) -> usize {
        (0..j.min(self.steps))
            .rev()
            .find(|&i| self.resets[i].contains(&c))
            .map_or(0, |i| i + 1)
    }

    /// Value of clock `c` on entering step `j` (`j ≤ n + 1`).
    pub fn clock_term(&self, c: ClockId, j: usize) -> LinExpr {
        if self.explicit.contains(&c) {
            LinExpr::var(self.clock_var(c, j))
        } else {
            LinExpr::sum((self.last_reset(c, j)..j).map(|i| self.delay(i)))
        }
    }

    /// Left-hand side of an occurrence with clock `c` in place of its own.
    pub fn occurrence_lhs(&self, occ: &Occurrence, c: ClockId) -> LinExpr {
        let t = self.clock_term(c, occ.step);
        if occ.exit {
            t.plus(&LinExpr::var(self.delay(occ.step)))
        } else {
            t
        }
    }

    /// The occurrence as written, with a replaced operator, bound and clock.
    pub fn occurrence_atom(&self, occ: &Occurrence, clock: ClockId, op: CmpOp, bound: &LinExpr) -> LinearAtom {
        LinearAtom::new(&self.occurrence_lhs(occ, clock), op, bound)
    }

    fn original_atom(&self, occ: &Occurrence) -> LinearAtom {
        let c = &occ.constraint;
        self.occurrence_atom(occ, c.clock, c.op, &LinExpr::constant(c.bound.clone()))
    }

    pub fn block(&self, b: Block) -> Vec<LinearAtom> {
        let eq = |l: LinExpr, r: LinExpr| LinearAtom::new(&l, CmpOp::Eq, &r);
        let mut out = Vec::new();
        match b {
            Block::C0 => {
                for c in &self.explicit {
                    out.push(eq(LinExpr::var(self.clock_var(*c, 0)), LinExpr::zero()));
                }
            }
            Block::A => {
                for d in self.delays() {
                    out.push(LinearAtom::new(&LinExpr::var(d), CmpOp::Ge, &LinExpr::zero()));
                }
            }
            Block::R => {
                for j in 0..self.steps {
                    for c in self.resets[j].intersection(&self.explicit) {
                        out.push(eq(LinExpr::var(self.clock_var(*c, j + 1)), LinExpr::zero()));
                    }
                }
            }
            Block::U => {
                for j in 0..=self.steps {
                    if self.urgent[j] {
                        out.push(eq(LinExpr::var(self.delay(j)), LinExpr::zero()));
                    }
                }
            }
            Block::D => {
                for j in 0..=self.steps {
                    for c in &self.explicit {
                        if j < self.steps && self.resets[j].contains(c) {
                            continue;
                        }
                        out.push(self.flow_atom(*c, j));
                    }
                }
            }
            Block::I | Block::G => {
                for occ in &self.occurrences {
                    let is_inv = matches!(occ.site, ConstraintSite::Invariant { .. });
                    if is_inv == (b == Block::I) {
                        out.push(self.original_atom(occ));
                    }
                }
            }
        }
        out
    }

    /// `c_{j+1} = c_j + δ_j`
    pub fn flow_atom(&self, c: ClockId, j: usize) -> LinearAtom {
        LinearAtom::new(
            &LinExpr::var(self.clock_var(c, j + 1)),
            CmpOp::Eq,
            &LinExpr::var(self.clock_var(c, j)).plus(&LinExpr::var(self.delay(j))),
        )
    }

    /// `c_{j+1} = 0`
    pub fn reset_atom(&self, c: ClockId, j: usize) -> LinearAtom {
        LinearAtom::new(&LinExpr::var(self.clock_var(c, j + 1)), CmpOp::Eq, &LinExpr::zero())
    }

    pub const BLOCKS: [Block; 7] = [Block::C0, Block::A, Block::R, Block::U, Block::D, Block::I, Block::G];

    pub fn labeled_atoms(&self) -> Vec<(Block, LinearAtom)> {
        Self::BLOCKS
            .iter()
            .flat_map(|b| self.block(*b).into_iter().map(move |a| (*b, a)))
            .collect()
    }

    pub fn atoms(&self) -> Vec<LinearAtom> {
        self.labeled_atoms().into_iter().map(|(_, a)| a).collect()
    }

    /// `¬Φ` as disjuncts over step-`n+1` clock values.
    pub fn violation_atoms(&self) -> Vec<Vec<LinearAtom>> {
        let j = self.steps + 1;
        self.violation
            .iter()
            .map(|term| {
                term.iter()
                    .map(|c| LinearAtom::new(&self.clock_term(c.clock, j), c.op, &LinExpr::constant(c.bound.clone())))
                    .collect()
            })
            .collect()
    }

    /// Delays and explicit clock variables: everything that is not a
    /// modification variable.
    pub fn trace_vars(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = self.delays().into_iter().collect();
        for c in &self.explicit {
            for j in 0..=self.steps + 1 {
                out.insert(self.clock_var(*c, j));
            }
        }
        out
    }

    /// Replace clock variables by delay sums. C0, R and D become empty.
    pub fn eliminate_clock_variables(&self) -> TdtConstraintSystem {
        self.with_explicit(BTreeSet::new())
    }

    pub fn with_explicit(&self, explicit: BTreeSet<ClockId>) -> TdtConstraintSystem {
        TdtConstraintSystem { explicit, ..self.clone() }
    }

    pub fn formula(&self) -> Formula {
        Formula::conj(self.atoms())
    }

    pub fn violating_formula(&self) -> Formula {
        let neg = Formula::or(self.violation_atoms().into_iter().map(Formula::conj).collect());
        Formula::and(vec![self.formula(), neg])
    }

    /// The trace has a realization.
    pub fn feasible(&self, budget: FmBudget) -> Result<bool, Timeout> {
        Ok(is_satisfiable(&self.formula(), budget)?.is_some())
    }

    /// The trace has a realization that violates the property.
    pub fn violating(&self, budget: FmBudget) -> Result<bool, Timeout> {
        Ok(is_satisfiable(&self.violating_formula(), budget)?.is_some())
    }

    pub fn var_name(&self, network: &Network, v: Var) -> String {
        let i = v.0 as usize;
        if i <= self.steps {
            return format!("d{i}");
        }
        let k = i - self.steps - 1;
        let c = k / (self.steps + 2);
        if c < self.clock_count {
            return format!("{}_{}", network.clocks[c], k % (self.steps + 2));
        }
        format!("v{}", i - self.first_free_var() as usize)
    }

    /// SMT-LIB2 text asserting every block and the negated property.
    pub fn to_smtlib(&self, network: &Network) -> String {
        let name = |v: Var| self.var_name(network, v);
        let mut vars: BTreeSet<Var> = self.trace_vars();
        for a in self.atoms() {
            vars.extend(a.vars());
        }
        let mut out = String::from("(set-logic QF_LRA)\n");
        for v in &vars {
            let _ = writeln!(out, "(declare-fun {} () Real)", name(*v));
        }
        for (b, a) in self.labeled_atoms() {
            let _ = writeln!(out, "(assert {}) ; {:?}", a.to_smtlib(&name), b);
        }
        let neg = Formula::or(self.violation_atoms().into_iter().map(Formula::conj).collect());
        let _ = writeln!(out, "(assert {}) ; not phi", neg.to_smtlib(&name));
        out.push_str("(check-sat)\n");
        out
    }
}

/// Point evaluation of a delay sequence against the explicit encoding:
/// clock values at every step, for cross-checking the two encodings.
pub fn clock_values(sys: &TdtConstraintSystem, delays: &[Rational]) -> Vec<Vec<Rational>> {
    let mut vals = vec![vec![Rational::from_integer(0.into()); sys.clock_count]];
    for j in 0..=sys.steps {
        let mut next = vals[j].clone();
        for (c, v) in next.iter_mut().enumerate() {
            if j < sys.steps && sys.resets[j].contains(&ClockId(c)) {
                *v = Rational::from_integer(0.into());
            } else {
                *v += &delays[j];
            }
        }
        vals.push(next);
    }
    vals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_model;
    use crate::model::{int, AutomatonId};
    use crate::zone::NetworkMove;

    fn setup() -> (Network, Property, SymbolicTrace) {
        let (n, p) = parse_model(
            r#"{"channels":[],"automata":[{"name":"a","initial":"l0","clocks":["x","y"],
            "locations":[{"name":"l0","invariant":["x <= 2"]},{"name":"l1"},{"name":"l2"}],
            "transitions":[{"source":"l0","target":"l1","guard":["x >= 1"],"resets":["y"]},
                           {"source":"l1","target":"l2"}]}],
            "property":"y <= 5"}"#,
        )
        .unwrap();
        let t = SymbolicTrace {
            moves: vec![
                NetworkMove::Internal {
                    automaton: AutomatonId(0),
                    transition: 0,
                },
                NetworkMove::Internal {
                    automaton: AutomatonId(0),
                    transition: 1,
                },
            ],
            locations: vec![vec![LocationId(0)], vec![LocationId(1)], vec![LocationId(2)]],
        };
        (n, p, t)
    }

    #[test]
    fn blocks_follow_definitions() {
        let (n, p, t) = setup();
        let sys = encode(&n, &t, &p);
        assert_eq!(sys.block(Block::C0).len(), 2);
        assert_eq!(sys.block(Block::A).len(), 3);
        // y reset by move 0
        assert_eq!(sys.block(Block::R), vec![sys.reset_atom(ClockId(1), 0)]);
        // 3 sojourns x 2 clocks, minus the reset pair
        assert_eq!(sys.block(Block::D).len(), 5);
        assert!(!sys.block(Block::D).contains(&sys.flow_atom(ClockId(1), 0)));
        // entry and exit copies of x <= 2
        assert_eq!(sys.block(Block::I).len(), 2);
        assert_eq!(sys.block(Block::G).len(), 1);
        assert!(sys.block(Block::U).is_empty());
    }

    #[test]
    fn elimination_uses_delay_sums() {
        let (n, p, t) = setup();
        let sys = encode(&n, &t, &p).eliminate_clock_variables();
        assert_eq!(sys.clock_term(ClockId(0), 2), LinExpr::sum([Var(0), Var(1)]));
        assert_eq!(sys.clock_term(ClockId(1), 3), LinExpr::sum([Var(1), Var(2)]));
        assert!(sys.block(Block::C0).is_empty() && sys.block(Block::R).is_empty() && sys.block(Block::D).is_empty());
        assert_eq!(sys.trace_vars().len(), 3);
    }

    #[test]
    fn both_encodings_agree_on_feasibility() {
        let (n, p, t) = setup();
        let sys = encode(&n, &t, &p);
        let b = FmBudget::default();
        assert!(sys.feasible(b).unwrap());
        assert!(sys.violating(b).unwrap());
        let e = sys.eliminate_clock_variables();
        assert!(e.feasible(b).unwrap());
        assert!(e.violating(b).unwrap());
    }

    #[test]
    fn empty_trace_has_minimal_blocks() {
        let (n, p) = parse_model(
            r#"{"channels":[],"automata":[{"name":"a","initial":"l","clocks":["x"],
            "locations":[{"name":"l"}],"transitions":[]}],"property":"x <= 1"}"#,
        )
        .unwrap();
        let t = SymbolicTrace {
            moves: vec![],
            locations: vec![vec![LocationId(0)]],
        };
        let sys = encode(&n, &t, &p);
        assert_eq!(sys.block(Block::C0).len(), 1);
        assert_eq!(sys.block(Block::A).len(), 1);
        assert_eq!(sys.violation, vec![vec![ClockConstraint::new(ClockId(0), CmpOp::Gt, int(1))]]);
        assert!(sys.violating(FmBudget::default()).unwrap());
    }

    #[test]
    fn clock_values_follow_resets() {
        let (n, p, t) = setup();
        let sys = encode(&n, &t, &p);
        let v = clock_values(&sys, &[int(1), int(2), int(3)]);
        assert_eq!(v[3], vec![int(6), int(5)]);
    }
}
