//! Fourier–Motzkin elimination and model extraction for conjunctions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::{Signed, Zero};

use super::search::{pick_in_interval, Interval};
use super::{LinExpr, LinearAtom, Model, Rel, Timeout, Var};
use crate::model::Rational;

/// Limit on the number of atoms generated by one elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FmBudget {
    pub max_atoms: usize,
}

impl Default for FmBudget {
    fn default() -> Self {
        FmBudget { max_atoms: 50_000 }
    }
}

/// Drop trivially true atoms, collapse to `[falsum]` on a trivially false one,
/// and keep only the tightest inequality per left-hand side.
pub(super) fn simplify(atoms: Vec<LinearAtom>) -> Vec<LinearAtom> {
    let mut eqs: BTreeSet<LinearAtom> = BTreeSet::new();
    let mut tightest: HashMap<Vec<(Var, Rational)>, (Rational, Rel)> = HashMap::new();
    let mut order: Vec<Vec<(Var, Rational)>> = Vec::new();
    for a in atoms {
        match a.truth() {
            Some(true) => continue,
            Some(false) => return vec![LinearAtom::falsum()],
            None => {}
        }
        if a.rel() == Rel::Eq {
            eqs.insert(a);
            continue;
        }
        let key = a.coeffs().to_vec();
        match tightest.get_mut(&key) {
            None => {
                order.push(key.clone());
                tightest.insert(key, (a.constant().clone(), a.rel()));
            }
            Some((c, rel)) => {
                if a.constant() < c || (a.constant() == c && a.rel() == Rel::Lt) {
                    *c = a.constant().clone();
                    *rel = a.rel();
                }
            }
        }
    }
    let mut out: Vec<LinearAtom> = eqs.into_iter().collect();
    for key in order {
        let (c, rel) = tightest.remove(&key).unwrap();
        // quick contradiction check against the opposite half-space
        let neg: Vec<(Var, Rational)> = key.iter().map(|(v, a)| (*v, -a.clone())).collect();
        if let Some((c2, rel2)) = tightest.get(&neg) {
            let sum = &c + c2;
            if sum.is_negative() || (sum.is_zero() && (rel == Rel::Lt || *rel2 == Rel::Lt)) {
                return vec![LinearAtom::falsum()];
            }
        }
        out.push(LinearAtom::from_parts(key.into_iter().collect(), rel, c));
    }
    out
}

fn is_false(atoms: &[LinearAtom]) -> bool {
    atoms.len() == 1 && atoms[0].truth() == Some(false)
}

/// Express `v` from an equality atom that mentions it.
fn solve_for(eq: &LinearAtom, v: Var) -> LinExpr {
    let a = eq.coeff(v).expect("variable in equality").clone();
    let mut e = LinExpr::constant(eq.constant().clone());
    for (w, c) in eq.coeffs() {
        if *w != v {
            e.add_term(*w, &-c.clone());
        }
    }
    e.scaled(&a.recip())
}

fn combine(p: &LinearAtom, n: &LinearAtom, v: Var) -> LinearAtom {
    let a = p.coeff(v).unwrap().clone();
    let b = -n.coeff(v).unwrap().clone();
    let lhs = p.lhs().scaled(&b).plus(&n.lhs().scaled(&a));
    let rel = if p.rel() == Rel::Lt || n.rel() == Rel::Lt {
        Rel::Lt
    } else {
        Rel::Le
    };
    let c = p.constant() * &b + n.constant() * &a;
    LinearAtom::from_parts(lhs.coeffs, rel, c)
}

enum Step {
    Subst(Var, LinExpr),
    Project(Var, Vec<LinearAtom>),
}

struct Eliminator {
    budget: FmBudget,
    generated: usize,
    history: Vec<Step>,
    record: bool,
}

impl Eliminator {
    fn charge(&mut self, n: usize) -> Result<(), Timeout> {
        self.generated += n;
        if self.generated > self.budget.max_atoms {
            Err(Timeout)
        } else {
            Ok(())
        }
    }

    fn run(&mut self, atoms: Vec<LinearAtom>, vars: &BTreeSet<Var>) -> Result<Vec<LinearAtom>, Timeout> {
        let mut cur = simplify(atoms);
        let mut remaining: BTreeSet<Var> = vars.clone();
        // Gaussian substitution through equalities first.
        loop {
            if is_false(&cur) {
                return Ok(cur);
            }
            let pick = cur.iter().enumerate().find_map(|(i, a)| {
                if a.rel() != Rel::Eq {
                    return None;
                }
                a.vars().find(|v| remaining.contains(v)).map(|v| (i, v))
            });
            let Some((i, v)) = pick else { break };
            let eq = cur.remove(i);
            let by = solve_for(&eq, v);
            self.charge(cur.len())?;
            cur = simplify(cur.iter().map(|a| a.substitute(v, &by)).collect());
            remaining.remove(&v);
            if self.record {
                self.history.push(Step::Subst(v, by));
            }
        }
        while !remaining.is_empty() {
            if is_false(&cur) {
                return Ok(cur);
            }
            // cheapest variable first
            let v = *remaining
                .iter()
                .min_by_key(|v| {
                    let (mut p, mut n) = (0usize, 0usize);
                    for a in &cur {
                        match a.coeff(**v) {
                            Some(c) if c.is_positive() => p += 1,
                            Some(_) => n += 1,
                            None => {}
                        }
                    }
                    p * n
                })
                .unwrap();
            remaining.remove(&v);
            let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
            let mut involved = Vec::new();
            for a in cur {
                match a.coeff(v) {
                    Some(c) => {
                        debug_assert!(a.rel() != Rel::Eq);
                        if c.is_positive() {
                            pos.push(a.clone());
                        } else {
                            neg.push(a.clone());
                        }
                        involved.push(a);
                    }
                    None => rest.push(a),
                }
            }
            self.charge(pos.len() * neg.len())?;
            for p in &pos {
                for n in &neg {
                    rest.push(combine(p, n, v));
                }
            }
            if self.record {
                self.history.push(Step::Project(v, involved));
            }
            cur = simplify(rest);
        }
        Ok(cur)
    }
}

/// Existentially eliminate `vars` from a conjunction. The result mentions only
/// the other variables; an infeasible input yields the single falsum atom.
pub fn eliminate(atoms: &[LinearAtom], vars: &BTreeSet<Var>, budget: FmBudget) -> Result<Vec<LinearAtom>, Timeout> {
    let mut e = Eliminator {
        budget,
        generated: 0,
        history: Vec::new(),
        record: false,
    };
    e.run(atoms.to_vec(), vars)
}

/// Decide a conjunction and produce a model preferring small integers.
pub fn solve(atoms: &[LinearAtom], budget: FmBudget) -> Result<Option<Model>, Timeout> {
    let vars: BTreeSet<Var> = atoms.iter().flat_map(|a| a.vars()).collect();
    let mut e = Eliminator {
        budget,
        generated: 0,
        history: Vec::new(),
        record: true,
    };
    let rest = e.run(atoms.to_vec(), &vars)?;
    if rest.iter().any(|a| a.truth() == Some(false)) {
        return Ok(None);
    }
    let mut values: BTreeMap<Var, Rational> = BTreeMap::new();
    for step in e.history.iter().rev() {
        match step {
            Step::Subst(v, by) => {
                let val = by.eval(&|w| values.get(&w).cloned().unwrap_or_else(Rational::zero));
                values.insert(*v, val);
            }
            Step::Project(v, involved) => {
                let mut iv = Interval::all();
                for a in involved {
                    let mut residual = a.constant().clone();
                    for (w, c) in a.coeffs() {
                        if w != v {
                            residual -= c * values.get(w).cloned().unwrap_or_else(Rational::zero);
                        }
                    }
                    let c = a.coeff(*v).unwrap();
                    let bound = residual / c;
                    let strict = a.rel() == Rel::Lt;
                    if c.is_positive() {
                        iv.meet_upper(bound, strict);
                    } else {
                        iv.meet_lower(bound, strict);
                    }
                }
                let val = pick_in_interval(&iv).expect("projection leaves a non-empty interval");
                values.insert(*v, val);
            }
        }
    }
    for v in vars {
        values.entry(v).or_insert_with(Rational::zero);
    }
    Ok(Some(Model {
        values,
        selection: BTreeMap::new(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CmpOp;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn atom(terms: &[(u32, i64)], op: CmpOp, c: i64) -> LinearAtom {
        let mut e = LinExpr::zero();
        for (v, k) in terms {
            e.add_term(Var(*v), &r(*k));
        }
        LinearAtom::new(&e, op, &LinExpr::constant(r(c)))
    }

    #[test]
    fn projection_of_a_chain() {
        // x <= y, y < z, z <= 3, eliminate y,z  =>  x < 3
        let atoms = vec![
            atom(&[(0, 1), (1, -1)], CmpOp::Le, 0),
            atom(&[(1, 1), (2, -1)], CmpOp::Lt, 0),
            atom(&[(2, 1)], CmpOp::Le, 3),
        ];
        let out = eliminate(&atoms, &[Var(1), Var(2)].into(), FmBudget::default()).unwrap();
        assert_eq!(out, vec![atom(&[(0, 1)], CmpOp::Lt, 3)]);
    }

    #[test]
    fn equality_substitution() {
        // x = y + 1, y >= 2  =>  x >= 3
        let atoms = vec![atom(&[(0, 1), (1, -1)], CmpOp::Eq, 1), atom(&[(1, 1)], CmpOp::Ge, 2)];
        let out = eliminate(&atoms, &[Var(1)].into(), FmBudget::default()).unwrap();
        assert_eq!(out, vec![atom(&[(0, 1)], CmpOp::Ge, 3)]);
    }

    #[test]
    fn strict_contradiction() {
        let atoms = vec![atom(&[(0, 1)], CmpOp::Lt, 1), atom(&[(0, 1)], CmpOp::Gt, 1)];
        assert_eq!(solve(&atoms, FmBudget::default()).unwrap(), None);
        let atoms = vec![atom(&[(0, 1)], CmpOp::Le, 1), atom(&[(0, 1)], CmpOp::Ge, 1)];
        let m = solve(&atoms, FmBudget::default()).unwrap().unwrap();
        assert_eq!(m.value(Var(0)), r(1));
    }

    #[test]
    fn model_satisfies_all_atoms() {
        let atoms = vec![
            atom(&[(0, 1), (1, 1)], CmpOp::Eq, 5),
            atom(&[(0, 1), (1, -1)], CmpOp::Gt, 0),
            atom(&[(1, 2)], CmpOp::Gt, 3),
        ];
        let m = solve(&atoms, FmBudget::default()).unwrap().unwrap();
        for a in &atoms {
            assert!(a.holds(&|v| m.value(v)), "{a}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let mut atoms = Vec::new();
        for i in 0..30u32 {
            atoms.push(atom(&[(0, 1), (i + 1, 1)], CmpOp::Le, i as i64));
            atoms.push(atom(&[(0, -1), (i + 31, 1)], CmpOp::Le, i as i64));
        }
        let r = eliminate(&atoms, &[Var(0)].into(), FmBudget { max_atoms: 100 });
        assert_eq!(r, Err(Timeout));
    }
}
