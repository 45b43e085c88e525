//! Repair loop: encode a violating trace, vary one kind of model element,
//! search for the fewest modifications that make the trace safe, apply them,
//! check admissibility, block, and repeat.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::admissibility::{admissible, AdmissibilityOptions, Equivalence};
use crate::encode::encode;
use crate::io::{format_constraint, format_rational};
use crate::lra::{
    is_satisfiable, max_sat, sample_repair_values, Domain, FmBudget, Formula, HardConstraint, MaxSatOutcome, MaxSmtProblem, Model, SoftVar,
    Timeout,
};
use crate::model::{AutomatonId, ClockId, CmpOp, ConstraintSite, LocationId, Network, Property, Rational};
use crate::variation::{vary, Anchor, VarDomain, VariationKind, VariedSystem};
use crate::zone::{check, CheckOptions, SymbolicTrace, Verdict, ZoneError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepairError {
    #[error(transparent)]
    Zone(#[from] ZoneError),
    #[error("repair does not match the model: {0}")]
    AnchorMismatch(String),
}

/// One syntactic edit, with the old and new value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Modification {
    Bound {
        site: ConstraintSite,
        index: usize,
        old: Rational,
        new: Rational,
    },
    Operator {
        site: ConstraintSite,
        index: usize,
        old: CmpOp,
        new: CmpOp,
    },
    ClockRef {
        site: ConstraintSite,
        index: usize,
        old: ClockId,
        new: ClockId,
    },
    /// Toggle the reset of `clock` on the transitions fired at `step`.
    Reset {
        step: usize,
        clock: ClockId,
        transitions: Vec<(AutomatonId, usize)>,
        add: bool,
    },
    Urgency {
        automaton: AutomatonId,
        location: LocationId,
        urgent: bool,
    },
}

impl Modification {
    pub fn describe(&self, network: &Network) -> String {
        let site_name = |site: &ConstraintSite| match *site {
            ConstraintSite::Invariant { automaton, location, .. } => {
                format!("invariant of {}", network.location_name(automaton, location))
            }
            ConstraintSite::Guard { automaton, transition, .. } => {
                let a = network.automaton(automaton);
                let t = &a.transitions[transition];
                format!(
                    "guard of {}.{} -> {}.{}",
                    a.name,
                    a.location(t.source).name,
                    a.name,
                    a.location(t.target).name
                )
            }
        };
        let shown = |site: &ConstraintSite, f: &dyn Fn(&mut crate::model::ClockConstraint)| {
            let mut c = network.constraint(*site).clone();
            f(&mut c);
            format_constraint(network, &c)
        };
        match self {
            Modification::Bound { site, index, old, new } => format!(
                "constraint #{index} ({}): {} -> {}",
                site_name(site),
                shown(site, &|c| c.bound = old.clone()),
                shown(site, &|c| c.bound = new.clone())
            ),
            Modification::Operator { site, index, old, new } => format!(
                "constraint #{index} ({}): {} -> {}",
                site_name(site),
                shown(site, &|c| c.op = *old),
                shown(site, &|c| c.op = *new)
            ),
            Modification::ClockRef { site, index, old, new } => format!(
                "constraint #{index} ({}): {} -> {}",
                site_name(site),
                shown(site, &|c| c.clock = *old),
                shown(site, &|c| c.clock = *new)
            ),
            Modification::Reset {
                step,
                clock,
                transitions,
                add,
            } => {
                let ts: Vec<String> = transitions
                    .iter()
                    .map(|(a, t)| {
                        let aut = network.automaton(*a);
                        let tr = &aut.transitions[*t];
                        format!(
                            "{}.{} -> {}.{}",
                            aut.name,
                            aut.location(tr.source).name,
                            aut.name,
                            aut.location(tr.target).name
                        )
                    })
                    .collect();
                format!(
                    "step {step}: {} reset of {} on {}",
                    if *add { "add" } else { "remove" },
                    network.clock_name(*clock),
                    ts.join(", ")
                )
            }
            Modification::Urgency {
                automaton,
                location,
                urgent,
            } => format!(
                "location {}: {}",
                network.location_name(*automaton, *location),
                if *urgent { "make urgent" } else { "make non-urgent" }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairCandidate {
    pub kind: VariationKind,
    pub modifications: Vec<Modification>,
    /// Raw solver values as `(variable, value)`.
    pub assignment: Vec<(String, String)>,
}

fn check_anchor(ok: bool, what: &str) -> Result<(), RepairError> {
    if ok {
        Ok(())
    } else {
        Err(RepairError::AnchorMismatch(what.to_string()))
    }
}

fn site_exists(network: &Network, site: &ConstraintSite) -> bool {
    match *site {
        ConstraintSite::Invariant {
            automaton,
            location,
            position,
        } => network
            .automata
            .get(automaton.0)
            .and_then(|a| a.locations.get(location.0))
            .is_some_and(|l| position < l.invariant.len()),
        ConstraintSite::Guard {
            automaton,
            transition,
            position,
        } => network
            .automata
            .get(automaton.0)
            .and_then(|a| a.transitions.get(transition))
            .is_some_and(|t| position < t.guard.len()),
    }
}

fn edit(network: &Network, m: &Modification, forward: bool) -> Result<Network, RepairError> {
    let mut out = network.clone();
    match m {
        Modification::Bound { site, old, new, .. } => {
            check_anchor(site_exists(network, site), "constraint site")?;
            let (from, to) = if forward { (old, new) } else { (new, old) };
            let c = out.constraint_mut(*site);
            check_anchor(c.bound == *from, "bound value")?;
            c.bound = to.clone();
        }
        Modification::Operator { site, old, new, .. } => {
            check_anchor(site_exists(network, site), "constraint site")?;
            let (from, to) = if forward { (old, new) } else { (new, old) };
            let c = out.constraint_mut(*site);
            check_anchor(c.op == *from, "operator")?;
            c.op = *to;
        }
        Modification::ClockRef { site, old, new, .. } => {
            check_anchor(site_exists(network, site), "constraint site")?;
            let (from, to) = if forward { (old, new) } else { (new, old) };
            let c = out.constraint_mut(*site);
            check_anchor(c.clock == *from, "clock reference")?;
            c.clock = *to;
        }
        Modification::Reset {
            clock, transitions, add, ..
        } => {
            let adding = *add == forward;
            for (a, t) in transitions {
                let tr = out
                    .automata
                    .get_mut(a.0)
                    .and_then(|x| x.transitions.get_mut(*t))
                    .ok_or_else(|| RepairError::AnchorMismatch("transition".into()))?;
                check_anchor(tr.resets.contains(clock) != adding, "reset set")?;
                if adding {
                    tr.resets.push(*clock);
                    tr.resets.sort();
                } else {
                    tr.resets.retain(|c| c != clock);
                }
            }
        }
        Modification::Urgency {
            automaton,
            location,
            urgent,
        } => {
            let target = if forward { *urgent } else { !*urgent };
            let loc = out
                .automata
                .get_mut(automaton.0)
                .and_then(|a| a.locations.get_mut(location.0))
                .ok_or_else(|| RepairError::AnchorMismatch("location".into()))?;
            check_anchor(loc.urgent != target, "urgency flag")?;
            loc.urgent = target;
        }
    }
    Ok(out)
}

/// The network with one edit applied.
pub fn apply_modification(network: &Network, m: &Modification) -> Result<Network, RepairError> {
    edit(network, m, true)
}

/// The repaired network.
pub fn apply(network: &Network, candidate: &RepairCandidate) -> Result<Network, RepairError> {
    let mut out = network.clone();
    for m in &candidate.modifications {
        out = edit(&out, m, true)?;
    }
    Ok(out)
}

/// Undo [`apply`].
pub fn revert(network: &Network, candidate: &RepairCandidate) -> Result<Network, RepairError> {
    let mut out = network.clone();
    for m in candidate.modifications.iter().rev() {
        out = edit(&out, m, false)?;
    }
    Ok(out)
}

/// The trace replayed on `repaired` is executable and no realization of it
/// violates the property.
pub fn contract_holds(repaired: &Network, trace: &SymbolicTrace, prop: &Property, budget: FmBudget) -> Result<bool, Timeout> {
    let sys = encode(repaired, trace, prop).eliminate_clock_variables();
    Ok(sys.feasible(budget)? && !sys.violating(budget)?)
}

/// How a found repair is excluded from later iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Blocking {
    /// Exclude the exact assignment and every assignment extending it.
    #[default]
    Assignment,
    /// Fix every modified variable to its neutral value.
    Variables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairOptions {
    /// Stop after this many candidates.
    pub max_repairs: usize,
    pub qe_budget: FmBudget,
    /// Hard-constraint checks per MaxSMT search.
    pub max_checks: usize,
    pub check: CheckOptions,
    pub admissibility: AdmissibilityOptions,
    /// Model check every repaired network again.
    pub recheck: bool,
    pub blocking: Blocking,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            max_repairs: 64,
            qe_budget: FmBudget::default(),
            max_checks: 20_000,
            check: CheckOptions::default(),
            admissibility: AdmissibilityOptions::default(),
            recheck: false,
            blocking: Blocking::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The model satisfies the property.
    NoRepairNeeded,
    /// No repair of this kind exists for the trace.
    NoRepair,
    /// Every repair has been enumerated.
    Exhausted,
    /// Candidate cap or search budget reached.
    Budget,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::NoRepairNeeded => "no-repair-needed",
            Termination::NoRepair => "no-repair",
            Termination::Exhausted => "exhausted",
            Termination::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairOutcome {
    pub candidate: RepairCandidate,
    pub repaired: Network,
    pub admissible: bool,
    pub witness: Option<Vec<String>>,
    /// The semantic repair contract re-verified on the repaired network.
    pub contract: bool,
    /// Verdict of the optional re-check, `true` for safe.
    pub safe: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairRun {
    pub kind: VariationKind,
    pub trace: Option<SymbolicTrace>,
    pub variables: usize,
    /// Size of the varied constraint system: solver variables and atoms.
    pub system_size: (usize, usize),
    pub outcomes: Vec<RepairOutcome>,
    pub termination: Termination,
    /// Eliminations that ran out of budget.
    pub timeouts: usize,
}

/// Modified variables and the values of the finite ones.
type Assignment = (BTreeSet<usize>, BTreeMap<usize, u32>);

/// Hard constraint of a varied system, one selector branch at a time.
pub struct VariedHard<'a> {
    pub system: &'a VariedSystem,
    pub budget: FmBudget,
    rational: OnceCell<Result<Formula, Timeout>>,
    /// Earlier answers; the search revisits assignments after each repair.
    memo: HashMap<Assignment, Result<Option<Model>, Timeout>>,
}

impl<'a> VariedHard<'a> {
    pub fn new(system: &'a VariedSystem, budget: FmBudget) -> Self {
        VariedHard {
            system,
            budget,
            rational: OnceCell::new(),
            memo: HashMap::new(),
        }
    }

    /// Hard constraint of the all-neutral branch (the only branch for bound
    /// variation), computed once.
    pub fn rational_formula(&self) -> Result<Formula, Timeout> {
        self.rational
            .get_or_init(|| self.system.hard_constraint(&BTreeMap::new(), self.budget))
            .clone()
    }
}

impl HardConstraint for VariedHard<'_> {
    fn check(&mut self, free: &BTreeSet<usize>, selection: &BTreeMap<usize, u32>) -> Result<Option<Model>, Timeout> {
        let key = (free.clone(), selection.clone());
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let r = self.check_uncached(free, selection);
        self.memo.insert(key, r.clone());
        r
    }
}

impl VariedHard<'_> {
    fn check_uncached(&self, free: &BTreeSet<usize>, selection: &BTreeMap<usize, u32>) -> Result<Option<Model>, Timeout> {
        let h = if selection.is_empty() {
            self.rational_formula()?
        } else {
            self.system.hard_constraint(selection, self.budget)?
        };
        let mut parts = vec![h];
        parts.extend(self.system.zero_atoms(free).into_iter().map(Formula::atom));
        is_satisfiable(&Formula::and(parts), self.budget)
    }
}

pub fn soft_vars(system: &VariedSystem, network: &Network) -> Vec<SoftVar> {
    system
        .variables
        .iter()
        .map(|v| SoftVar {
            name: variable_name(network, system, v),
            domain: match v.domain {
                VarDomain::Rational(x) => Domain::Continuous(x),
                VarDomain::Finite { .. } => Domain::Finite(v.alternatives()),
            },
        })
        .collect()
}

fn variable_name(network: &Network, system: &VariedSystem, v: &crate::variation::VariationVariable) -> String {
    match v.anchor {
        Anchor::Constraint { index, .. } => format!("{}{}", system.kind.name(), index),
        Anchor::Reset { step, clock } => format!("reset{}_{}", step, network.clock_name(clock)),
        Anchor::Urgency { automaton, location } => format!("urgent_{}", network.location_name(automaton, location)),
    }
}

fn build_candidate(
    network: &Network,
    trace: &SymbolicTrace,
    system: &VariedSystem,
    modified: &BTreeSet<usize>,
    selection: &BTreeMap<usize, u32>,
    values: &BTreeMap<crate::lra::Var, Rational>,
) -> RepairCandidate {
    let mut modifications = Vec::new();
    let mut assignment = Vec::new();
    for &i in modified {
        let v = &system.variables[i];
        let name = variable_name(network, system, v);
        match (v.anchor, &v.domain) {
            (Anchor::Constraint { site, index }, VarDomain::Rational(x)) => {
                let old = network.constraint(site).bound.clone();
                let delta = values[x].clone();
                assignment.push((name, format_rational(&delta)));
                modifications.push(Modification::Bound {
                    site,
                    index,
                    new: &old + delta,
                    old,
                });
            }
            (Anchor::Constraint { site, index }, VarDomain::Finite { .. }) => {
                let value = selection[&i];
                assignment.push((name, value.to_string()));
                let c = network.constraint(site);
                modifications.push(match system.kind {
                    VariationKind::Operator => Modification::Operator {
                        site,
                        index,
                        old: c.op,
                        new: CmpOp::from_index(value as usize).expect("operator index"),
                    },
                    _ => Modification::ClockRef {
                        site,
                        index,
                        old: c.clock,
                        new: v.clocks[value as usize],
                    },
                });
            }
            (Anchor::Reset { step, clock }, _) => {
                assignment.push((name, "1".into()));
                let parts = trace.moves[step].parts();
                let resetting: Vec<(AutomatonId, usize)> = parts
                    .iter()
                    .copied()
                    .filter(|(a, t)| network.automaton(*a).transitions[*t].resets.contains(&clock))
                    .collect();
                let (transitions, add) = if resetting.is_empty() {
                    // the receiver if both moving automata own the clock
                    let owner = parts.iter().rev().find(|(a, _)| network.automaton(*a).owns_clock(clock)).copied();
                    (owner.into_iter().collect(), true)
                } else {
                    (resetting, false)
                };
                modifications.push(Modification::Reset {
                    step,
                    clock,
                    transitions,
                    add,
                });
            }
            (Anchor::Urgency { automaton, location }, _) => {
                assignment.push((name, "1".into()));
                modifications.push(Modification::Urgency {
                    automaton,
                    location,
                    urgent: !network.automaton(automaton).location(location).urgent,
                });
            }
        }
    }
    RepairCandidate {
        kind: system.kind,
        modifications,
        assignment,
    }
}

/// Enumerate repairs of one kind for a violating trace, fewest modifications
/// first. Without a trace the model checker supplies a shortest one.
pub fn run(
    network: &Network,
    prop: &Property,
    kind: VariationKind,
    tdt: Option<SymbolicTrace>,
    opts: RepairOptions,
) -> Result<RepairRun, RepairError> {
    let trace = match tdt {
        Some(t) => t,
        None => match check(network, prop, opts.check)? {
            Verdict::Safe => {
                return Ok(RepairRun {
                    kind,
                    trace: None,
                    variables: 0,
                    system_size: (0, 0),
                    outcomes: vec![],
                    termination: Termination::NoRepairNeeded,
                    timeouts: 0,
                })
            }
            Verdict::Violated(t) => t,
        },
    };
    let sys = encode(network, &trace, prop).eliminate_clock_variables();
    let system = vary(network, &trace, &sys, kind);
    let system_size = (
        sys.trace_vars().len() + system.variables.len(),
        system.formula.atom_count() + system.domain.len(),
    );
    let mut problem = MaxSmtProblem {
        soft: soft_vars(&system, network),
        max_checks: opts.max_checks,
        ..Default::default()
    };
    let mut hard = VariedHard::new(&system, opts.qe_budget);
    let mut outcomes = Vec::new();
    let mut timeouts = 0;
    let termination = loop {
        if outcomes.len() >= opts.max_repairs {
            break Termination::Budget;
        }
        let (found, stats) = match max_sat(&problem, &mut hard) {
            Ok(r) => r,
            Err(Timeout) => break Termination::Budget,
        };
        timeouts += stats.timeouts;
        let (modified, selection) = match found {
            MaxSatOutcome::NoRepair if outcomes.is_empty() && timeouts > 0 => break Termination::Budget,
            MaxSatOutcome::NoRepair if outcomes.is_empty() => break Termination::NoRepair,
            MaxSatOutcome::NoRepair => break Termination::Exhausted,
            MaxSatOutcome::Found { modified, selection, .. } => (modified, selection),
        };
        let mut values = BTreeMap::new();
        if kind == VariationKind::Bound {
            let base = hard.rational_formula().expect("checked during search");
            let mut parts = vec![base];
            parts.extend(system.zero_atoms(&modified).into_iter().map(Formula::atom));
            let order: Vec<_> = modified
                .iter()
                .filter_map(|i| match system.variables[*i].domain {
                    VarDomain::Rational(x) => Some(x),
                    VarDomain::Finite { .. } => None,
                })
                .collect();
            match sample_repair_values(&Formula::and(parts), &order, opts.qe_budget) {
                Ok(Some(v)) => values = v,
                Ok(None) => unreachable!("search returned a satisfiable set"),
                Err(Timeout) => {
                    timeouts += 1;
                    problem.forced_zero.extend(modified.iter().copied());
                    continue;
                }
            }
        }
        let candidate = build_candidate(network, &trace, &system, &modified, &selection, &values);
        let repaired = apply(network, &candidate)?;
        let contract = contract_holds(&repaired, &trace, prop, opts.qe_budget).unwrap_or(false);
        let (admissible, witness) = match admissible(network, &repaired, &[prop], opts.admissibility)? {
            Equivalence::Equal => (true, None),
            Equivalence::Witness(w) => (false, Some(w)),
        };
        let safe = if opts.recheck {
            Some(check(&repaired, prop, opts.check)? == Verdict::Safe)
        } else {
            None
        };
        outcomes.push(RepairOutcome {
            candidate,
            repaired,
            admissible,
            witness,
            contract,
            safe,
        });
        if kind == VariationKind::Bound || opts.blocking == Blocking::Variables {
            problem.forced_zero.extend(modified.iter().copied());
        } else {
            problem
                .blocked
                .push(modified.iter().map(|i| (*i, selection.get(i).copied())).collect());
        }
    };
    Ok(RepairRun {
        kind,
        trace: Some(trace),
        variables: system.variables.len(),
        system_size,
        outcomes,
        termination,
        timeouts,
    })
}

/// Human-readable, deterministic summary of a run.
pub fn write_report(network: &Network, run: &RepairRun) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} ==", run.kind);
    match &run.trace {
        None => {
            let _ = writeln!(out, "no violation found");
        }
        Some(t) => {
            let _ = writeln!(out, "trace: {} steps", t.len());
            for (j, mv) in t.moves.iter().enumerate() {
                let label = mv.label(network).unwrap_or_else(|| "tau".into());
                let moved: Vec<String> = mv
                    .parts()
                    .iter()
                    .map(|(a, _)| {
                        format!(
                            "{} -> {}",
                            network.location_name(*a, t.locations[j][a.0]),
                            network.location_name(*a, t.locations[j + 1][a.0])
                        )
                    })
                    .collect();
                let _ = writeln!(out, "  {j}: {label} ({})", moved.join(", "));
            }
            let _ = writeln!(out, "variation variables: {}", run.variables);
        }
    }
    let _ = writeln!(out, "candidates: {}", run.outcomes.len());
    for (i, o) in run.outcomes.iter().enumerate() {
        let status = if o.admissible {
            "admissible".to_string()
        } else {
            "inadmissible".to_string()
        };
        let _ = write!(out, "  #{} {status}", i + 1);
        if let Some(w) = &o.witness {
            let _ = write!(out, ", witness: [{}]", w.join(" "));
        }
        if let Some(s) = o.safe {
            let _ = write!(out, ", {}", if s { "safe" } else { "still violating" });
        }
        let _ = writeln!(out);
        for m in &o.candidate.modifications {
            let _ = writeln!(out, "     {}", m.describe(network));
        }
        let vals: Vec<String> = o.candidate.assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "     values: {}", vals.join(", "));
    }
    let _ = writeln!(out, "termination: {}", run.termination.name());
    let _ = writeln!(out, "timeouts: {}", run.timeouts);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_model;
    use crate::model::int;

    fn sample() -> (Network, Property) {
        parse_model(
            r#"{"channels":[],"automata":[{"name":"a","initial":"l0","clocks":["x","y"],
            "locations":[{"name":"l0","invariant":["x <= 3"]},{"name":"l1","invariant":["y <= 0"]}],
            "transitions":[{"source":"l0","target":"l1","guard":["x >= 2"],"resets":["y"]}]}],
            "property":"x <= 2 || !@a.l1"}"#,
        )
        .unwrap()
    }

    #[test]
    fn bound_repair_tightens_invariant() {
        let (n, p) = sample();
        let run = run(&n, &p, VariationKind::Bound, None, RepairOptions::default()).unwrap();
        let first = &run.outcomes[0];
        assert_eq!(
            first.candidate.modifications,
            vec![Modification::Bound {
                site: ConstraintSite::Invariant {
                    automaton: AutomatonId(0),
                    location: LocationId(0),
                    position: 0
                },
                index: 0,
                old: int(3),
                new: int(2),
            }]
        );
        assert!(run.outcomes.iter().all(|o| o.contract));
    }

    #[test]
    fn apply_then_revert_is_identity() {
        let (n, p) = sample();
        for kind in VariationKind::ALL {
            let r = run(&n, &p, kind, None, RepairOptions::default()).unwrap();
            for o in &r.outcomes {
                assert_eq!(revert(&o.repaired, &o.candidate).unwrap(), n, "{kind}");
                assert!(o.contract, "{kind}");
            }
        }
    }

    #[test]
    fn safe_model_needs_no_repair() {
        let (n, _) = sample();
        let r = run(&n, &Property::True, VariationKind::Bound, None, RepairOptions::default()).unwrap();
        assert_eq!(r.termination, Termination::NoRepairNeeded);
        assert!(r.outcomes.is_empty());
    }

    #[test]
    fn anchor_mismatch_is_an_error() {
        let (n, p) = sample();
        let r = run(&n, &p, VariationKind::Bound, None, RepairOptions::default()).unwrap();
        let c = &r.outcomes[0].candidate;
        assert!(matches!(apply(&r.outcomes[0].repaired, c), Err(RepairError::AnchorMismatch(_))));
    }
}
