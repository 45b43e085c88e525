//! Reference implementations used to cross-check the library.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ta_repair::admissibility::UntimedAutomaton;
use ta_repair::encode::encode;
use ta_repair::lra::{is_satisfiable, FmBudget, Formula, LinExpr, LinearAtom, Var};
use ta_repair::model::{int, CmpOp, Network, Property, Rational};
use ta_repair::repair::{apply, Modification, RepairCandidate};
use ta_repair::variation::{vary, VarDomain, VariationKind, VariedSystem};
use ta_repair::SymbolicTrace;

fn eps_closure(u: &UntimedAutomaton, seed: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = seed.into_iter().collect();
    while let Some(s) = stack.pop() {
        if seen.insert(s) {
            stack.extend(u.edges[s].iter().filter(|(l, _)| l.is_none()).map(|(_, t)| *t));
        }
    }
    seen
}

/// Number of reachable non-empty subsets in the determinization.
pub fn determinized_size(u: &UntimedAutomaton) -> usize {
    let Some(i) = u.initial else { return 1 };
    let start = eps_closure(u, [i]);
    let mut seen: HashSet<BTreeSet<usize>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(set) = queue.pop_front() {
        let mut by_label: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for s in &set {
            for (l, t) in &u.edges[*s] {
                if let Some(l) = l {
                    by_label.entry(l).or_default().insert(*t);
                }
            }
        }
        for (_, targets) in by_label {
            let next = eps_closure(u, targets);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen.len()
}

/// Shortest word (length at most `max_len`) accepted by exactly one
/// automaton, by enumerating words level by level. Words rejected by both
/// are not extended: both languages are prefix-closed.
pub fn brute_force_difference(
    a: &UntimedAutomaton,
    b: &UntimedAutomaton,
    max_len: usize,
    max_words: usize,
) -> Result<Option<Vec<String>>, ()> {
    let alphabet: Vec<String> = a.alphabet().union(&b.alphabet()).cloned().collect();
    if a.accepts(&[]) != b.accepts(&[]) {
        return Ok(Some(vec![]));
    }
    if !a.accepts(&[]) {
        return Ok(None);
    }
    let mut level: Vec<Vec<String>> = vec![vec![]];
    let mut visited = 0usize;
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &level {
            for l in &alphabet {
                let mut v = w.clone();
                v.push(l.clone());
                let (x, y) = (a.accepts(&v), b.accepts(&v));
                if x != y {
                    return Ok(Some(v));
                }
                if x {
                    visited += 1;
                    if visited > max_words {
                        return Err(());
                    }
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(None)
}

/// Re-encode `trace` against `network`: (feasible, violating).
pub fn reencode(network: &Network, trace: &SymbolicTrace, prop: &Property) -> (bool, bool) {
    let sys = encode(network, trace, prop);
    let b = FmBudget::default();
    let feasible = is_satisfiable(&Formula::conj(sys.atoms()), b).unwrap().is_some();
    let violating = sys.violation_atoms().into_iter().any(|d| {
        let mut atoms = sys.atoms();
        atoms.extend(d);
        is_satisfiable(&Formula::conj(atoms), b).unwrap().is_some()
    });
    (feasible, violating)
}

fn finite_assignments(system: &VariedSystem, subset: &[usize]) -> Vec<BTreeMap<usize, u32>> {
    let mut out = vec![BTreeMap::new()];
    for &i in subset {
        let alts = system.variables[i].alternatives();
        out = out
            .into_iter()
            .flat_map(|m| {
                alts.iter().map(move |v| {
                    let mut m = m.clone();
                    m.insert(i, *v);
                    m
                })
            })
            .collect();
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut with: Vec<Vec<usize>> = subsets(n - 1, k - 1);
    for s in with.iter_mut() {
        s.push(n - 1);
    }
    let mut out = subsets(n - 1, k);
    out.extend(with);
    out
}

/// Does a repair with exactly these modified variables exist?
/// Discrete kinds build the modified network and re-encode the trace.
/// Bound variation asks for values directly: executable for some delays,
/// and no violating delays for the same values.
fn subset_repairs(network: &Network, trace: &SymbolicTrace, prop: &Property, system: &VariedSystem, subset: &[usize]) -> bool {
    if system.kind == VariationKind::Bound {
        return bound_subset_repairs(system, subset);
    }
    finite_assignments(system, subset).into_iter().any(|sel| {
        let cand = candidate_for(network, trace, system, &sel);
        match apply(network, &cand) {
            Ok(repaired) => reencode(&repaired, trace, prop) == (true, false),
            Err(_) => false,
        }
    })
}

/// The network edit described by a discrete selection, built without the
/// repair module's candidate construction.
fn candidate_for(network: &Network, trace: &SymbolicTrace, system: &VariedSystem, sel: &BTreeMap<usize, u32>) -> RepairCandidate {
    use ta_repair::variation::Anchor;
    let mut mods = Vec::new();
    for (&i, &value) in sel {
        let v = &system.variables[i];
        match v.anchor {
            Anchor::Constraint { site, index } => {
                let c = network.constraint(site);
                mods.push(match system.kind {
                    VariationKind::Operator => Modification::Operator {
                        site,
                        index,
                        old: c.op,
                        new: CmpOp::from_index(value as usize).unwrap(),
                    },
                    _ => Modification::ClockRef {
                        site,
                        index,
                        old: c.clock,
                        new: v.clocks[value as usize],
                    },
                });
            }
            Anchor::Reset { step, clock } => {
                let parts = trace.moves[step].parts();
                let resetting: Vec<_> = parts
                    .iter()
                    .copied()
                    .filter(|(a, t)| network.automaton(*a).transitions[*t].resets.contains(&clock))
                    .collect();
                let (transitions, add) = if resetting.is_empty() {
                    let owner = parts.iter().rev().find(|(a, _)| network.automaton(*a).owns_clock(clock)).copied();
                    (owner.into_iter().collect(), true)
                } else {
                    (resetting, false)
                };
                mods.push(Modification::Reset {
                    step,
                    clock,
                    transitions,
                    add,
                });
            }
            Anchor::Urgency { automaton, location } => mods.push(Modification::Urgency {
                automaton,
                location,
                urgent: !network.automaton(automaton).location(location).urgent,
            }),
        }
    }
    RepairCandidate {
        kind: system.kind,
        modifications: mods,
        assignment: vec![],
    }
}

fn bound_subset_repairs(system: &VariedSystem, subset: &[usize]) -> bool {
    // exists v (exists d. T(v,d)) and not (exists d. T(v,d) and violation(d)),
    // decided by the library's hard constraint; the subset search is ours.
    let free: BTreeSet<usize> = subset.iter().copied().collect();
    let mut parts = vec![system.hard_constraint(&BTreeMap::new(), FmBudget::default()).unwrap()];
    parts.extend(system.zero_atoms(&free).into_iter().map(Formula::atom));
    is_satisfiable(&Formula::and(parts), FmBudget::default()).unwrap().is_some()
}

/// Smallest number of modified variables over all subsets, or `None`.
pub fn exhaustive_minimum(network: &Network, trace: &SymbolicTrace, prop: &Property, kind: VariationKind) -> Option<usize> {
    let sys = encode(network, trace, prop).eliminate_clock_variables();
    let system = vary(network, trace, &sys, kind);
    let n = system.variables.len();
    (0..=n).find(|&k| subsets(n, k).iter().any(|s| subset_repairs(network, trace, prop, &system, s)))
}

/// Number of variation variables for a kind on a trace.
pub fn variation_size(network: &Network, trace: &SymbolicTrace, prop: &Property, kind: VariationKind) -> usize {
    let sys = encode(network, trace, prop).eliminate_clock_variables();
    vary(network, trace, &sys, kind).variables.len()
}

/// Count of single syntactic differences between two networks of the same
/// shape: bound, operator and clock of each constraint, reset membership per
/// transition and clock, and urgency per location.
pub fn structural_edits(a: &Network, b: &Network) -> usize {
    let mut d = 0;
    let sa = a.constraint_sites();
    assert_eq!(sa, b.constraint_sites(), "constraint layout changed");
    for s in sa {
        let (x, y) = (a.constraint(s), b.constraint(s));
        d += (x.bound != y.bound) as usize + (x.op != y.op) as usize + (x.clock != y.clock) as usize;
    }
    for (aa, ab) in a.automata.iter().zip(&b.automata) {
        for (ta, tb) in aa.transitions.iter().zip(&ab.transitions) {
            let ra: BTreeSet<_> = ta.resets.iter().collect();
            let rb: BTreeSet<_> = tb.resets.iter().collect();
            d += ra.symmetric_difference(&rb).count();
        }
        for (la, lb) in aa.locations.iter().zip(&ab.locations) {
            d += (la.urgent != lb.urgent) as usize;
        }
    }
    d
}

/// Independent count of the documented seeding operators.
pub fn expected_mutants(n: &Network, m: &Rational) -> BTreeMap<VariationKind, usize> {
    let mut counts = BTreeMap::new();
    let mut bound = 0;
    let mut operator = 0;
    let mut clockref = 0;
    for site in n.constraint_sites() {
        let c = n.constraint(site);
        let shifts = [int(-10), int(-1), int(1), (m / int(10)).ceil(), m.clone()];
        let values: BTreeSet<Rational> = shifts
            .iter()
            .map(|d| {
                let v = &c.bound + d;
                if v < int(0) {
                    int(0)
                } else {
                    v
                }
            })
            .filter(|v| *v != c.bound)
            .collect();
        bound += values.len();
        operator += [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt]
            .iter()
            .filter(|o| **o != c.op)
            .count();
        clockref += n.automaton(site.automaton()).clocks.len() - 1;
    }
    let mut reset = 0;
    let mut urgent = 0;
    for a in &n.automata {
        reset += a.transitions.len() * a.clocks.len();
        urgent += a.locations.len();
    }
    counts.insert(VariationKind::Bound, bound);
    counts.insert(VariationKind::Operator, operator);
    counts.insert(VariationKind::ClockRef, clockref);
    counts.insert(VariationKind::Reset, reset);
    counts.insert(VariationKind::Urgency, urgent);
    counts
}

/// Random conjunction over variables `0..vars`.
pub fn random_conjunction(rng: &mut ChaCha8Rng, vars: u32, atoms: usize) -> Vec<LinearAtom> {
    (0..atoms)
        .map(|_| {
            let mut lhs = LinExpr::zero();
            for v in 0..vars {
                let c = rng.gen_range(-2..=2);
                if c != 0 {
                    lhs.add_term(Var(v), &int(c));
                }
            }
            let rhs = LinExpr::constant(int(rng.gen_range(-4..=4)));
            let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt][rng.gen_range(0..5)];
            LinearAtom::new(&lhs, op, &rhs)
        })
        .collect()
}

/// A point on a half-integer grid.
pub fn random_point(rng: &mut ChaCha8Rng, vars: &[Var]) -> BTreeMap<Var, Rational> {
    vars.iter()
        .map(|v| (*v, Rational::new(rng.gen_range(-10..=10).into(), 2.into())))
        .collect()
}

/// Does `point` extend to a solution of `atoms`?
pub fn extends(atoms: &[LinearAtom], point: &BTreeMap<Var, Rational>) -> bool {
    let mut f = Formula::conj(atoms.to_vec());
    for (v, x) in point {
        f = f.assign(*v, x);
    }
    is_satisfiable(&f, FmBudget::default()).unwrap().is_some()
}

pub fn rational_var_count(system: &VariedSystem) -> usize {
    system
        .variables
        .iter()
        .filter(|v| matches!(v.domain, VarDomain::Rational(_)))
        .count()
}
