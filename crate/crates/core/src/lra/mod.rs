//! Exact linear real arithmetic over rationals.
//!
//! Atoms are kept in a normal form `Σ a_i·x_i  (< | <= | =)  c` with no zero
//! coefficients and the first coefficient scaled to magnitude one, so equal
//! half-spaces compare equal. Formulas are negation-free trees of atoms and
//! finite-domain selector literals.

mod fm;
mod search;

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::model::{CmpOp, Rational};

pub use fm::{eliminate, solve, FmBudget};
pub use search::{
    dnf, hard_constraint, is_satisfiable, max_sat, pick_in_interval, project_interval, sample_repair_values, Domain, FormulaConstraint,
    HardConstraint, Interval, MaxSatOutcome, MaxSmtProblem, SearchStats, SoftVar,
};

/// Quantifier elimination or search ran past its budget.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("quantifier elimination budget exceeded")]
pub struct Timeout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

/// Finite-domain selector (operator index, clock index, flip bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Selector(pub u32);

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Var, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr::default()
    }

    pub fn var(v: Var) -> LinExpr {
        let mut e = LinExpr::zero();
        e.coeffs.insert(v, Rational::one());
        e
    }

    pub fn constant(c: impl Into<Rational>) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: c.into(),
        }
    }

    pub fn sum(vars: impl IntoIterator<Item = Var>) -> LinExpr {
        let mut e = LinExpr::zero();
        for v in vars {
            e.add_term(v, &Rational::one());
        }
        e
    }

    pub fn add_term(&mut self, v: Var, c: &Rational) {
        let entry = self.coeffs.entry(v).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn plus(mut self, other: &LinExpr) -> LinExpr {
        for (v, c) in &other.coeffs {
            self.add_term(*v, c);
        }
        self.constant += &other.constant;
        self
    }

    pub fn scaled(mut self, k: &Rational) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    pub fn minus(self, other: &LinExpr) -> LinExpr {
        self.plus(&other.clone().scaled(&-Rational::one()))
    }

    pub fn eval(&self, values: &dyn Fn(Var) -> Rational) -> Rational {
        let mut s = self.constant.clone();
        for (v, c) in &self.coeffs {
            s += c * values(*v);
        }
        s
    }

    /// Replace `v` by `by`.
    pub fn substitute(&self, v: Var, by: &LinExpr) -> LinExpr {
        match self.coeffs.get(&v) {
            None => self.clone(),
            Some(c) => {
                let c = c.clone();
                let mut rest = self.clone();
                rest.coeffs.remove(&v);
                rest.plus(&by.clone().scaled(&c))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
}

/// `Σ coeffs · x  rel  constant`, normalized.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearAtom {
    coeffs: Vec<(Var, Rational)>,
    rel: Rel,
    constant: Rational,
}

impl LinearAtom {
    /// `lhs op rhs` for any comparison operator.
    pub fn compare(lhs: &LinExpr, op: CmpOp, rhs: &LinExpr) -> Vec<LinearAtom> {
        // lhs - rhs op 0  <=>  Σ a x  op  -(const)
        let d = lhs.clone().minus(rhs);
        let (coeffs, c) = (d.coeffs, -d.constant);
        let neg = |m: BTreeMap<Var, Rational>| m.into_iter().map(|(v, a)| (v, -a)).collect::<BTreeMap<_, _>>();
        match op {
            CmpOp::Lt => vec![LinearAtom::from_parts(coeffs, Rel::Lt, c)],
            CmpOp::Le => vec![LinearAtom::from_parts(coeffs, Rel::Le, c)],
            CmpOp::Eq => vec![LinearAtom::from_parts(coeffs, Rel::Eq, c)],
            CmpOp::Ge => vec![LinearAtom::from_parts(neg(coeffs), Rel::Le, -c)],
            CmpOp::Gt => vec![LinearAtom::from_parts(neg(coeffs), Rel::Lt, -c)],
        }
    }

    /// Single-atom form of `lhs op rhs`.
    pub fn new(lhs: &LinExpr, op: CmpOp, rhs: &LinExpr) -> LinearAtom {
        LinearAtom::compare(lhs, op, rhs).pop().expect("one atom")
    }

    pub fn from_parts(coeffs: BTreeMap<Var, Rational>, rel: Rel, constant: Rational) -> LinearAtom {
        let mut coeffs: Vec<(Var, Rational)> = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let mut constant = constant;
        if let Some((_, first)) = coeffs.first() {
            let scale = match rel {
                Rel::Eq => first.recip(),
                _ => first.abs().recip(),
            };
            if !scale.is_one() {
                for (_, c) in coeffs.iter_mut() {
                    *c *= &scale;
                }
                constant *= &scale;
            }
        }
        LinearAtom { coeffs, rel, constant }
    }

    pub fn falsum() -> LinearAtom {
        LinearAtom {
            coeffs: vec![],
            rel: Rel::Lt,
            constant: Rational::zero(),
        }
    }

    pub fn coeffs(&self) -> &[(Var, Rational)] {
        &self.coeffs
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    pub fn coeff(&self, v: Var) -> Option<&Rational> {
        self.coeffs.iter().find(|(w, _)| *w == v).map(|(_, c)| c)
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.coeff(v).is_some()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.coeffs.iter().map(|(v, _)| *v)
    }

    pub fn lhs(&self) -> LinExpr {
        LinExpr {
            coeffs: self.coeffs.iter().cloned().collect(),
            constant: Rational::zero(),
        }
    }

    /// Truth value of a variable-free atom.
    pub fn truth(&self) -> Option<bool> {
        if !self.coeffs.is_empty() {
            return None;
        }
        let zero = Rational::zero();
        Some(match self.rel {
            Rel::Lt => zero < self.constant,
            Rel::Le => zero <= self.constant,
            Rel::Eq => zero == self.constant,
        })
    }

    pub fn holds(&self, values: &dyn Fn(Var) -> Rational) -> bool {
        let lhs = self.lhs().eval(values);
        match self.rel {
            Rel::Lt => lhs < self.constant,
            Rel::Le => lhs <= self.constant,
            Rel::Eq => lhs == self.constant,
        }
    }

    pub fn substitute(&self, v: Var, by: &LinExpr) -> LinearAtom {
        if !self.mentions(v) {
            return self.clone();
        }
        let e = self.lhs().substitute(v, by);
        LinearAtom::from_parts(e.coeffs, self.rel, &self.constant - e.constant)
    }

    /// The complement as a disjunction of atoms.
    pub fn negate(&self) -> Vec<LinearAtom> {
        let neg: BTreeMap<Var, Rational> = self.coeffs.iter().map(|(v, c)| (*v, -c.clone())).collect();
        let pos: BTreeMap<Var, Rational> = self.coeffs.iter().cloned().collect();
        match self.rel {
            Rel::Lt => vec![LinearAtom::from_parts(neg, Rel::Le, -self.constant.clone())],
            Rel::Le => vec![LinearAtom::from_parts(neg, Rel::Lt, -self.constant.clone())],
            Rel::Eq => vec![
                LinearAtom::from_parts(pos, Rel::Lt, self.constant.clone()),
                LinearAtom::from_parts(neg, Rel::Lt, -self.constant.clone()),
            ],
        }
    }

    pub fn to_smtlib(&self, name: &dyn Fn(Var) -> String) -> String {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .map(|(v, c)| {
                if c.is_one() {
                    name(*v)
                } else {
                    format!("(* {} {})", smt_rational(c), name(*v))
                }
            })
            .collect();
        let lhs = match terms.len() {
            0 => "0".to_string(),
            1 => terms[0].clone(),
            _ => format!("(+ {})", terms.join(" ")),
        };
        let rel = match self.rel {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
        };
        format!("({rel} {lhs} {})", smt_rational(&self.constant))
    }
}

fn smt_rational(r: &Rational) -> String {
    let body = if r.is_integer() {
        format!("{}", r.numer().abs())
    } else {
        format!("(/ {} {})", r.numer().abs(), r.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

impl fmt::Display for LinearAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_smtlib(&|v| format!("v{}", v.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(LinearAtom),
    Select(Selector, u32),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(a: LinearAtom) -> Formula {
        match a.truth() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(a),
        }
    }

    pub fn conj(atoms: impl IntoIterator<Item = LinearAtom>) -> Formula {
        Formula::and(atoms.into_iter().map(Formula::atom).collect())
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// Negation of a selector-free formula, pushed to the atoms.
    ///
    /// # Panics
    /// On selector literals, whose complement depends on the domain.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(a) => Formula::or(a.negate().into_iter().map(Formula::atom).collect()),
            Formula::Select(..) => panic!("cannot negate a selector literal without its domain"),
            Formula::And(v) => Formula::or(v.iter().map(Formula::negate).collect()),
            Formula::Or(v) => Formula::and(v.iter().map(Formula::negate).collect()),
        }
    }

    /// Fix selectors: literals of assigned selectors become constants.
    pub fn restrict(&self, selection: &BTreeMap<Selector, u32>) -> Formula {
        match self {
            Formula::Select(s, k) => match selection.get(s) {
                Some(v) if v == k => Formula::True,
                Some(_) => Formula::False,
                None => self.clone(),
            },
            Formula::And(v) => Formula::and(v.iter().map(|f| f.restrict(selection)).collect()),
            Formula::Or(v) => Formula::or(v.iter().map(|f| f.restrict(selection)).collect()),
            other => other.clone(),
        }
    }

    /// Substitute a constant for a variable everywhere.
    pub fn assign(&self, v: Var, value: &Rational) -> Formula {
        match self {
            Formula::Atom(a) => Formula::atom(a.substitute(v, &LinExpr::constant(value.clone()))),
            Formula::And(xs) => Formula::and(xs.iter().map(|f| f.assign(v, value)).collect()),
            Formula::Or(xs) => Formula::or(xs.iter().map(|f| f.assign(v, value)).collect()),
            other => other.clone(),
        }
    }

    /// Atoms of a pure conjunction, `None` if the formula has other structure.
    pub fn as_conjunction(&self) -> Option<Vec<LinearAtom>> {
        match self {
            Formula::True => Some(vec![]),
            Formula::False => Some(vec![LinearAtom::falsum()]),
            Formula::Atom(a) => Some(vec![a.clone()]),
            Formula::And(v) => {
                let mut out = Vec::new();
                for f in v {
                    out.extend(f.as_conjunction()?);
                }
                Some(out)
            }
            Formula::Or(v) if v.len() == 1 => v[0].as_conjunction(),
            _ => None,
        }
    }

    pub fn eval(&self, values: &dyn Fn(Var) -> Rational, selection: &dyn Fn(Selector) -> Option<u32>) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(values),
            Formula::Select(s, k) => selection(*s) == Some(*k),
            Formula::And(v) => v.iter().all(|f| f.eval(values, selection)),
            Formula::Or(v) => v.iter().any(|f| f.eval(values, selection)),
        }
    }

    pub fn atom_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::And(v) | Formula::Or(v) => v.iter().map(Formula::atom_count).sum(),
            _ => 0,
        }
    }

    pub fn to_smtlib(&self, name: &dyn Fn(Var) -> String) -> String {
        match self {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Atom(a) => a.to_smtlib(name),
            Formula::Select(s, k) => format!("(= sel{} {})", s.0, k),
            Formula::And(v) => format!("(and {})", v.iter().map(|f| f.to_smtlib(name)).collect::<Vec<_>>().join(" ")),
            Formula::Or(v) => format!("(or {})", v.iter().map(|f| f.to_smtlib(name)).collect::<Vec<_>>().join(" ")),
        }
    }
}

/// A satisfying assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    pub values: BTreeMap<Var, Rational>,
    pub selection: BTreeMap<Selector, u32>,
}

impl Model {
    pub fn value(&self, v: Var) -> Rational {
        self.values.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn satisfies(&self, f: &Formula) -> bool {
        f.eval(&|v| self.value(v), &|s| self.selection.get(&s).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn normal_form_is_unique() {
        let x = LinExpr::var(Var(0));
        let y = LinExpr::var(Var(1));
        let a = LinearAtom::new(
            &x.clone().scaled(&r(2)).plus(&y.clone().scaled(&r(4))),
            CmpOp::Le,
            &LinExpr::constant(r(6)),
        );
        let b = LinearAtom::new(&x.plus(&y.clone().scaled(&r(2))), CmpOp::Le, &LinExpr::constant(r(3)));
        assert_eq!(a, b);
    }

    #[test]
    fn ge_and_gt_are_flipped() {
        let x = LinExpr::var(Var(0));
        let a = LinearAtom::new(&x, CmpOp::Gt, &LinExpr::constant(r(1)));
        assert_eq!(a.rel(), Rel::Lt);
        assert_eq!(a.constant(), &r(-1));
        assert!(a.holds(&|_| r(2)));
        assert!(!a.holds(&|_| r(1)));
    }

    #[test]
    fn negation_complements() {
        let x = LinExpr::var(Var(0));
        for op in CmpOp::ALL {
            let a = LinearAtom::new(&x, op, &LinExpr::constant(r(1)));
            let n = Formula::atom(a.clone()).negate();
            for v in [r(0), r(1), r(2)] {
                let val = |_| v.clone();
                assert_ne!(a.holds(&val), n.eval(&val, &|_| None));
            }
        }
    }

    #[test]
    fn smtlib_dump() {
        let a = LinearAtom::new(&LinExpr::sum([Var(0), Var(1)]), CmpOp::Le, &LinExpr::constant(r(2)));
        assert_eq!(a.to_smtlib(&|v| format!("d{}", v.0)), "(<= (+ d0 d1) 2)");
    }
}
