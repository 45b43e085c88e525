//! Boolean search over formulas, the repair hard constraint, partial MaxSMT
//! by ascending modification count, and value sampling.

use std::collections::{BTreeMap, BTreeSet};

use num::{Signed, Zero};

use super::fm::{eliminate, simplify, solve, FmBudget};
use super::{Formula, LinExpr, LinearAtom, Model, Rel, Selector, Timeout, Var};
use crate::model::{CmpOp, Rational};

/// A possibly unbounded interval of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    /// `(bound, strict)`
    pub lo: Option<(Rational, bool)>,
    pub hi: Option<(Rational, bool)>,
}

impl Interval {
    pub fn all() -> Interval {
        Interval { lo: None, hi: None }
    }

    pub fn meet_lower(&mut self, b: Rational, strict: bool) {
        let tighter = match &self.lo {
            None => true,
            Some((c, s)) => b > *c || (b == *c && strict && !s),
        };
        if tighter {
            self.lo = Some((b, strict));
        }
    }

    pub fn meet_upper(&mut self, b: Rational, strict: bool) {
        let tighter = match &self.hi {
            None => true,
            Some((c, s)) => b < *c || (b == *c && strict && !s),
        };
        if tighter {
            self.hi = Some((b, strict));
        }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        let lo_ok = match &self.lo {
            None => true,
            Some((b, s)) => v > b || (!s && v == b),
        };
        let hi_ok = match &self.hi {
            None => true,
            Some((b, s)) => v < b || (!s && v == b),
        };
        lo_ok && hi_ok
    }

    pub fn is_empty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some((l, ls)), Some((h, hs))) => l > h || (l == h && (*ls || *hs)),
            _ => false,
        }
    }
}

/// Integer of least magnitude in the interval, else its midpoint (or its only
/// point). `None` if empty.
pub fn pick_in_interval(iv: &Interval) -> Option<Rational> {
    if iv.is_empty() {
        return None;
    }
    let zero = Rational::zero();
    if iv.contains(&zero) {
        return Some(zero);
    }
    let candidate = match (&iv.lo, &iv.hi) {
        // entirely positive: smallest integer above the lower bound
        (Some((l, strict)), _) if l >= &zero => {
            if *strict {
                l.floor() + Rational::from_integer(1.into())
            } else {
                l.ceil()
            }
        }
        // entirely negative: largest integer below the upper bound
        (_, Some((h, strict))) => {
            if *strict {
                h.ceil() - Rational::from_integer(1.into())
            } else {
                h.floor()
            }
        }
        _ => unreachable!("an interval avoiding zero is bounded on one side"),
    };
    if iv.contains(&candidate) {
        return Some(candidate);
    }
    match (&iv.lo, &iv.hi) {
        (Some((l, _)), Some((h, _))) if l == h => Some(l.clone()),
        (Some((l, _)), Some((h, _))) => Some((l + h) / Rational::from_integer(2.into())),
        _ => unreachable!("unbounded intervals contain integers"),
    }
}

/// Preferred value over a union of intervals.
fn pick_in_union(ivs: &[Interval]) -> Option<Rational> {
    let picks: Vec<Rational> = ivs.iter().filter_map(pick_in_interval).collect();
    let best_int = picks
        .iter()
        .filter(|v| v.is_integer())
        .min_by(|a, b| a.abs().cmp(&b.abs()).then(a.cmp(b)))
        .cloned();
    best_int.or_else(|| picks.first().cloned())
}

fn check_selection(sels: &mut BTreeMap<Selector, u32>, s: Selector, k: u32) -> bool {
    match sels.get(&s) {
        Some(v) => *v == k,
        None => {
            sels.insert(s, k);
            true
        }
    }
}

struct Dfs<'a> {
    budget: FmBudget,
    on_leaf: &'a mut dyn FnMut(Vec<LinearAtom>, BTreeMap<Selector, u32>) -> Result<bool, Timeout>,
    prune: bool,
}

impl Dfs<'_> {
    /// Returns true to stop the enumeration.
    fn go(&mut self, mut conj: Vec<LinearAtom>, mut sels: BTreeMap<Selector, u32>, mut pending: Vec<&Formula>) -> Result<bool, Timeout> {
        while let Some(f) = pending.pop() {
            match f {
                Formula::True => {}
                Formula::False => return Ok(false),
                Formula::Atom(a) => conj.push(a.clone()),
                Formula::Select(s, k) => {
                    if !check_selection(&mut sels, *s, *k) {
                        return Ok(false);
                    }
                }
                Formula::And(v) => pending.extend(v.iter()),
                Formula::Or(v) => {
                    conj = simplify(conj);
                    if conj.iter().any(|a| a.truth() == Some(false)) {
                        return Ok(false);
                    }
                    if self.prune && solve(&conj, self.budget)?.is_none() {
                        return Ok(false);
                    }
                    for child in v {
                        let mut p = pending.clone();
                        p.push(child);
                        if self.go(conj.clone(), sels.clone(), p)? {
                            return Ok(true);
                        }
                    }
                    return Ok(false);
                }
            }
        }
        let conj = simplify(conj);
        if conj.iter().any(|a| a.truth() == Some(false)) {
            return Ok(false);
        }
        (self.on_leaf)(conj, sels)
    }
}

/// A satisfying assignment of `f`, if any.
pub fn is_satisfiable(f: &Formula, budget: FmBudget) -> Result<Option<Model>, Timeout> {
    let mut found = None;
    let mut leaf = |conj: Vec<LinearAtom>, sels: BTreeMap<Selector, u32>| -> Result<bool, Timeout> {
        if let Some(mut m) = solve(&conj, budget)? {
            m.selection = sels;
            found = Some(m);
            return Ok(true);
        }
        Ok(false)
    };
    let mut dfs = Dfs {
        budget,
        on_leaf: &mut leaf,
        prune: true,
    };
    dfs.go(Vec::new(), BTreeMap::new(), vec![f])?;
    Ok(found)
}

/// One disjunct: its atoms and the selector values that lead to it.
pub type Term = (Vec<LinearAtom>, BTreeMap<Selector, u32>);

/// Disjunctive normal form; terms that are trivially false are dropped.
pub fn dnf(f: &Formula, max_terms: usize, budget: FmBudget) -> Result<Vec<Term>, Timeout> {
    let mut terms = Vec::new();
    let mut leaf = |conj: Vec<LinearAtom>, sels: BTreeMap<Selector, u32>| -> Result<bool, Timeout> {
        terms.push((conj, sels));
        if terms.len() > max_terms {
            return Err(Timeout);
        }
        Ok(false)
    };
    let mut dfs = Dfs {
        budget,
        on_leaf: &mut leaf,
        prune: false,
    };
    dfs.go(Vec::new(), BTreeMap::new(), vec![f])?;
    Ok(terms)
}

/// `∃δ. T  ∧  ∧_k ¬∃δ. (T ∧ D_k)`: the modification values under which the
/// trace stays executable and every violating disjunct `D_k` becomes
/// unreachable along it.
pub fn hard_constraint(
    system: &[LinearAtom],
    violation: &[Vec<LinearAtom>],
    elim: &BTreeSet<Var>,
    budget: FmBudget,
) -> Result<Formula, Timeout> {
    let executable = eliminate(system, elim, budget)?;
    if executable.iter().any(|a| a.truth() == Some(false)) {
        return Ok(Formula::False);
    }
    let mut parts = vec![Formula::conj(executable)];
    for d in violation {
        let mut atoms = system.to_vec();
        atoms.extend(d.iter().cloned());
        let reach = eliminate(&atoms, elim, budget)?;
        parts.push(Formula::conj(reach).negate());
    }
    Ok(Formula::and(parts))
}

/// Range of `v` over the solutions of a conjunction.
pub fn project_interval(term: &[LinearAtom], v: Var, budget: FmBudget) -> Result<Interval, Timeout> {
    let others: BTreeSet<Var> = term.iter().flat_map(|a| a.vars()).filter(|w| *w != v).collect();
    let atoms = eliminate(term, &others, budget)?;
    let mut iv = Interval::all();
    for a in atoms {
        match a.truth() {
            Some(false) => {
                iv.meet_lower(Rational::from_integer(1.into()), false);
                iv.meet_upper(Rational::zero(), false);
                return Ok(iv);
            }
            Some(true) => continue,
            None => {}
        }
        let c = a.coeff(v).expect("only v remains").clone();
        let b = a.constant() / &c;
        match a.rel() {
            Rel::Eq => {
                iv.meet_lower(b.clone(), false);
                iv.meet_upper(b, false);
            }
            rel => {
                let strict = rel == Rel::Lt;
                if c.is_positive() {
                    iv.meet_upper(b, strict);
                } else {
                    iv.meet_lower(b, strict);
                }
            }
        }
    }
    Ok(iv)
}

/// Fix the variables in `order` one after the other, each to the preferred
/// value of its current projection. `None` if `hard` is unsatisfiable.
pub fn sample_repair_values(hard: &Formula, order: &[Var], budget: FmBudget) -> Result<Option<BTreeMap<Var, Rational>>, Timeout> {
    let mut f = hard.clone();
    let mut out = BTreeMap::new();
    if is_satisfiable(&f, budget)?.is_none() {
        return Ok(None);
    }
    for &v in order {
        let terms = dnf(&f, 100_000, budget)?;
        let mut ivs = Vec::new();
        for (conj, _) in &terms {
            let iv = project_interval(conj, v, budget)?;
            if !iv.is_empty() {
                ivs.push(iv);
            }
        }
        let Some(val) = pick_in_union(&ivs) else {
            return Ok(None);
        };
        f = f.assign(v, &val);
        out.insert(v, val);
    }
    Ok(Some(out))
}

/// Domain of a soft variable. `Finite` lists the values other than the
/// "no modification" value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Continuous(Var),
    Finite(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftVar {
    pub name: String,
    pub domain: Domain,
}

/// Soft constraints "variable keeps its neutral value", weight 1 each.
#[derive(Debug, Clone, Default)]
pub struct MaxSmtProblem {
    pub soft: Vec<SoftVar>,
    /// Variables pinned to neutral by hard asserts.
    pub forced_zero: BTreeSet<usize>,
    /// Patterns excluded together with every extension: a candidate is
    /// blocked if it modifies all keys, with matching values where given.
    pub blocked: Vec<BTreeMap<usize, Option<u32>>>,
    /// Upper bound on hard-constraint checks.
    pub max_checks: usize,
}

/// Supplies the hard constraint for a fixed choice of modified variables.
pub trait HardConstraint {
    /// Satisfying model when exactly the variables in `free` may deviate,
    /// finite ones taking the values in `selection`.
    fn check(&mut self, free: &BTreeSet<usize>, selection: &BTreeMap<usize, u32>) -> Result<Option<Model>, Timeout>;
}

/// A plain formula over continuous soft variables.
pub struct FormulaConstraint<'a> {
    pub formula: &'a Formula,
    pub vars: Vec<Var>,
    pub budget: FmBudget,
}

impl HardConstraint for FormulaConstraint<'_> {
    fn check(&mut self, free: &BTreeSet<usize>, _selection: &BTreeMap<usize, u32>) -> Result<Option<Model>, Timeout> {
        let mut parts = vec![self.formula.clone()];
        for (i, v) in self.vars.iter().enumerate() {
            if !free.contains(&i) {
                parts.push(Formula::atom(LinearAtom::new(&LinExpr::var(*v), CmpOp::Eq, &LinExpr::zero())));
            }
        }
        is_satisfiable(&Formula::and(parts), self.budget)
    }
}

#[derive(Debug, Clone)]
pub enum MaxSatOutcome {
    Found {
        modified: BTreeSet<usize>,
        selection: BTreeMap<usize, u32>,
        model: Model,
    },
    NoRepair,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub checks: usize,
    /// Candidates skipped because their elimination timed out.
    pub timeouts: usize,
}

fn is_blocked(problem: &MaxSmtProblem, free: &BTreeSet<usize>, sel: &BTreeMap<usize, u32>) -> bool {
    problem.blocked.iter().any(|p| {
        p.iter().all(|(k, v)| {
            free.contains(k)
                && match v {
                    None => true,
                    Some(val) => sel.get(k) == Some(val),
                }
        })
    })
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimum number of modified variables satisfying the hard constraint.
/// Candidates of equal size are tried in lexicographic order. `Err` only
/// when `max_checks` is exhausted.
pub fn max_sat(problem: &MaxSmtProblem, hard: &mut dyn HardConstraint) -> Result<(MaxSatOutcome, SearchStats), Timeout> {
    let mut stats = SearchStats::default();
    let allowed: Vec<usize> = (0..problem.soft.len()).filter(|i| !problem.forced_zero.contains(i)).collect();
    let n = allowed.len();
    let continuous = problem.soft.iter().all(|s| matches!(s.domain, Domain::Continuous(_)));
    if continuous && problem.blocked.is_empty() {
        let all: BTreeSet<usize> = allowed.iter().copied().collect();
        stats.checks += 1;
        match hard.check(&all, &BTreeMap::new()) {
            Ok(None) => return Ok((MaxSatOutcome::NoRepair, stats)),
            Ok(Some(_)) => {}
            Err(Timeout) => stats.timeouts += 1,
        }
    }
    for size in 0..=n {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            let free: BTreeSet<usize> = comb.iter().map(|&i| allowed[i]).collect();
            let finite: Vec<(usize, &Vec<u32>)> = free
                .iter()
                .filter_map(|&i| match &problem.soft[i].domain {
                    Domain::Finite(vals) => Some((i, vals)),
                    Domain::Continuous(_) => None,
                })
                .collect();
            let mut digits = vec![0usize; finite.len()];
            let has_values = finite.iter().all(|(_, vals)| !vals.is_empty());
            if has_values {
                loop {
                    let selection: BTreeMap<usize, u32> = finite.iter().zip(&digits).map(|((i, vals), d)| (*i, vals[*d])).collect();
                    if !is_blocked(problem, &free, &selection) {
                        stats.checks += 1;
                        if stats.checks > problem.max_checks.max(1) {
                            return Err(Timeout);
                        }
                        match hard.check(&free, &selection) {
                            Ok(Some(model)) => {
                                return Ok((
                                    MaxSatOutcome::Found {
                                        modified: free,
                                        selection,
                                        model,
                                    },
                                    stats,
                                ))
                            }
                            Ok(None) => {}
                            Err(Timeout) => stats.timeouts += 1,
                        }
                    }
                    // odometer over the finite choices
                    let mut advanced = false;
                    let mut pos = digits.len();
                    while pos > 0 {
                        pos -= 1;
                        digits[pos] += 1;
                        if digits[pos] < finite[pos].1.len() {
                            advanced = true;
                            break;
                        }
                        digits[pos] = 0;
                    }
                    if !advanced {
                        break;
                    }
                }
            }
            if size == 0 || !next_combination(&mut comb, n) {
                break;
            }
        }
    }
    Ok((MaxSatOutcome::NoRepair, stats))
}
