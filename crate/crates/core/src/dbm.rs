//! Difference bound matrices over integer constants.
//!
//! Entry `(i, j)` bounds `x_i - x_j`, index 0 being the constant-zero
//! reference clock. Every public operation leaves the matrix canonical.

use std::fmt;

/// An upper bound `(value, strict)` packed as `2 * value + (non-strict ? 1 : 0)`
/// so that the natural integer order is the tightness order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

impl Bound {
    pub const INFINITY: Bound = Bound(i64::MAX);
    pub const LE_ZERO: Bound = Bound(1);
    pub const LT_ZERO: Bound = Bound(0);

    pub fn le(v: i64) -> Bound {
        Bound(2 * v + 1)
    }

    pub fn lt(v: i64) -> Bound {
        Bound(2 * v)
    }

    pub fn is_infinite(self) -> bool {
        self == Bound::INFINITY
    }

    pub fn value(self) -> i64 {
        self.0 >> 1
    }

    pub fn is_strict(self) -> bool {
        self.0 & 1 == 0
    }
}

impl std::ops::Add for Bound {
    type Output = Bound;

    fn add(self, other: Bound) -> Bound {
        if self.is_infinite() || other.is_infinite() {
            return Bound::INFINITY;
        }
        Bound(((self.value() + other.value()) << 1) | (self.0 & other.0 & 1))
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "<inf")
        } else {
            write!(f, "{}{}", if self.is_strict() { "<" } else { "<=" }, self.value())
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    m: Vec<Bound>,
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Dbm[{}]", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<_> = (0..self.dim).map(|j| format!("{:?}", self.get(i, j))).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        Ok(())
    }
}

impl Dbm {
    /// The zone where every one of `clocks` equals zero.
    pub fn zero(clocks: usize) -> Dbm {
        let dim = clocks + 1;
        Dbm {
            dim,
            m: vec![Bound::LE_ZERO; dim * dim],
        }
    }

    /// All non-negative valuations.
    pub fn universe(clocks: usize) -> Dbm {
        let dim = clocks + 1;
        let mut m = vec![Bound::INFINITY; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Bound::LE_ZERO;
            m[i] = Bound::LE_ZERO; // 0 - x_i <= 0
        }
        Dbm { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.dim + j] = b;
    }

    pub fn is_empty(&self) -> bool {
        self.get(0, 0) < Bound::LE_ZERO
    }

    fn mark_empty(&mut self) {
        self.set(0, 0, Bound::LT_ZERO);
    }

    /// All-pairs shortest paths.
    pub fn canonicalize(&mut self) {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.get(i, k);
                if ik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let via = ik + self.get(k, j);
                    if via < self.get(i, j) {
                        self.set(i, j, via);
                    }
                }
            }
        }
        if (0..n).any(|i| self.get(i, i) < Bound::LE_ZERO) {
            self.mark_empty();
        }
    }

    /// Delay: drop upper bounds on every clock.
    pub fn up(&mut self) {
        if self.is_empty() {
            return;
        }
        for i in 1..self.dim {
            self.set(i, 0, Bound::INFINITY);
        }
    }

    /// Reset clock `x` (1-based index) to zero.
    pub fn reset(&mut self, x: usize) {
        if self.is_empty() {
            return;
        }
        for j in 0..self.dim {
            self.set(x, j, self.get(0, j));
            self.set(j, x, self.get(j, 0));
        }
        self.set(x, x, Bound::LE_ZERO);
    }

    /// Intersect with `x_i - x_j ≺ b`.
    pub fn and(&mut self, i: usize, j: usize, b: Bound) {
        if self.is_empty() {
            return;
        }
        if self.get(j, i) + b < Bound::LE_ZERO {
            self.mark_empty();
            return;
        }
        if b < self.get(i, j) {
            self.set(i, j, b);
            // incremental closure through the changed edge
            let n = self.dim;
            for a in 0..n {
                let ai = self.get(a, i);
                if ai.is_infinite() {
                    continue;
                }
                for c in 0..n {
                    let via = ai + b + self.get(j, c);
                    if via < self.get(a, c) {
                        self.set(a, c, via);
                    }
                }
            }
            if (0..n).any(|k| self.get(k, k) < Bound::LE_ZERO) {
                self.mark_empty();
            }
        }
    }

    /// Classic maximal-constant extrapolation.
    pub fn extrapolate(&mut self, k: i64) {
        if self.is_empty() {
            return;
        }
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if b.is_infinite() {
                    continue;
                }
                if i != 0 && b > Bound::le(k) {
                    self.set(i, j, Bound::INFINITY);
                } else if b < Bound::lt(-k) {
                    self.set(i, j, Bound::lt(-k));
                }
            }
        }
        self.canonicalize();
    }

    /// `self ⊆ other`, both canonical.
    pub fn is_subset_of(&self, other: &Dbm) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        self.m.iter().zip(&other.m).all(|(a, b)| a <= b)
    }

    /// Membership of an integer-scaled point given as `2 * value` per clock
    /// (half units, so that open intervals have representatives).
    pub fn contains_doubled(&self, point: &[i64]) -> bool {
        if self.is_empty() {
            return false;
        }
        let v = |i: usize| if i == 0 { 0 } else { point[i - 1] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = self.get(i, j);
                if b.is_infinite() {
                    continue;
                }
                let diff = v(i) - v(j);
                let lim = 2 * b.value();
                if diff > lim || (diff == lim && b.is_strict()) {
                    return false;
                }
            }
        }
        true
    }
}
