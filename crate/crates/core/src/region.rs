//! Region automaton of a network, used as an independent reference for the
//! untimed language of the zone abstraction.

use std::collections::{HashMap, VecDeque};

use crate::admissibility::{move_label, UntimedAutomaton};
use crate::model::{ClockConstraint, CmpOp, LocationId};
use crate::zone::{ZoneError, ZoneSemantics};

/// A clock region for constant `k`: integer parts (capped at `k + 1`, meaning
/// "above k"), which bounded clocks have zero fractional part, and the
/// bounded clocks with non-zero fractional part grouped by increasing
/// fraction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    ints: Vec<i64>,
    zero: Vec<bool>,
    groups: Vec<Vec<usize>>,
}

impl Region {
    pub fn origin(clocks: usize) -> Region {
        Region {
            ints: vec![0; clocks],
            zero: vec![true; clocks],
            groups: vec![],
        }
    }

    fn bounded(&self, x: usize, k: i64) -> bool {
        self.ints[x] <= k
    }

    /// Truth of `x ∼ m` for an integer `m ≤ k`, uniform over the region.
    pub fn satisfies(&self, x: usize, op: CmpOp, m: i64, k: i64) -> bool {
        let i = self.ints[x];
        if !self.bounded(x, k) {
            return matches!(op, CmpOp::Gt | CmpOp::Ge);
        }
        if self.zero[x] {
            return op.holds(&i, &m);
        }
        // i < value < i + 1
        match op {
            CmpOp::Lt | CmpOp::Le => i < m,
            CmpOp::Eq => false,
            CmpOp::Ge | CmpOp::Gt => i >= m,
        }
    }

    /// The immediate time successor; equal to `self` once every clock is
    /// above `k`.
    pub fn time_successor(&self, k: i64) -> Region {
        let mut r = self.clone();
        let zeros: Vec<usize> = (0..r.ints.len()).filter(|&x| r.bounded(x, k) && r.zero[x]).collect();
        if !zeros.is_empty() {
            let mut group = Vec::new();
            for &x in &zeros {
                r.zero[x] = false;
                if r.ints[x] == k {
                    r.ints[x] = k + 1;
                } else {
                    group.push(x);
                }
            }
            if !group.is_empty() {
                r.groups.insert(0, group);
            }
            return r;
        }
        if let Some(top) = r.groups.pop() {
            for x in top {
                r.ints[x] += 1;
                r.zero[x] = true;
                if r.ints[x] > k {
                    r.ints[x] = k + 1;
                    r.zero[x] = false;
                }
            }
        }
        r
    }

    pub fn reset(&mut self, x: usize) {
        self.ints[x] = 0;
        self.zero[x] = true;
        for g in self.groups.iter_mut() {
            g.retain(|y| *y != x);
        }
        self.groups.retain(|g| !g.is_empty());
    }
}

fn holds(sem: &ZoneSemantics, r: &Region, cs: &[ClockConstraint]) -> Result<bool, ZoneError> {
    for c in cs {
        let m = sem.scaling.scale(&c.bound)?;
        if !r.satisfies(c.clock.0, c.op, m, sem.k) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn invariant_holds(sem: &ZoneSemantics, locs: &[LocationId], r: &Region) -> Result<bool, ZoneError> {
    for (a, l) in locs.iter().enumerate() {
        if !holds(sem, r, &sem.network.automata[a].location(*l).invariant)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Region graph with silent delay edges and move edges labelled as in the
/// zone abstraction.
pub fn region_automaton(sem: &ZoneSemantics, visible_internal: bool, max_states: usize) -> Result<UntimedAutomaton, ZoneError> {
    let clocks = sem.network.clocks.len();
    let init_locs = sem.network.initial_locations();
    let init = Region::origin(clocks);
    if !invariant_holds(sem, &init_locs, &init)? {
        return Ok(UntimedAutomaton {
            initial: None,
            edges: vec![],
        });
    }
    let mut index: HashMap<(Vec<LocationId>, Region), usize> = HashMap::new();
    let mut states: Vec<(Vec<LocationId>, Region)> = vec![(init_locs.clone(), init.clone())];
    let mut edges: Vec<Vec<(Option<String>, usize)>> = vec![vec![]];
    index.insert((init_locs, init), 0);
    let mut queue = VecDeque::from([0usize]);
    let mut add = |key: (Vec<LocationId>, Region),
                   states: &mut Vec<(Vec<LocationId>, Region)>,
                   edges: &mut Vec<Vec<(Option<String>, usize)>>,
                   queue: &mut VecDeque<usize>|
     -> Result<usize, ZoneError> {
        if let Some(j) = index.get(&key) {
            return Ok(*j);
        }
        if states.len() >= max_states {
            return Err(ZoneError::Exhausted(max_states));
        }
        let j = states.len();
        index.insert(key.clone(), j);
        states.push(key);
        edges.push(vec![]);
        queue.push_back(j);
        Ok(j)
    };
    while let Some(i) = queue.pop_front() {
        let (locs, r) = states[i].clone();
        if !sem.is_urgent(&locs) {
            let succ = r.time_successor(sem.k);
            if succ != r && invariant_holds(sem, &locs, &succ)? {
                let j = add((locs.clone(), succ), &mut states, &mut edges, &mut queue)?;
                edges[i].push((None, j));
            }
        }
        for mv in sem.moves(&locs) {
            let parts = mv.parts();
            let mut enabled = true;
            for (a, t) in &parts {
                enabled &= holds(sem, &r, &sem.network.automaton(*a).transitions[*t].guard)?;
            }
            if !enabled {
                continue;
            }
            let mut next = r.clone();
            let mut next_locs = locs.clone();
            for (a, t) in &parts {
                let tr = &sem.network.automaton(*a).transitions[*t];
                for c in &tr.resets {
                    next.reset(c.0);
                }
                next_locs[a.0] = tr.target;
            }
            if !invariant_holds(sem, &next_locs, &next)? {
                continue;
            }
            let j = add((next_locs, next), &mut states, &mut edges, &mut queue)?;
            edges[i].push((move_label(sem.network, &mv, visible_internal), j));
        }
    }
    Ok(UntimedAutomaton { initial: Some(0), edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn successors_walk_through_regions() {
        // two clocks, k = 1: (0,0) -> 0<x=y<1 -> x=y=1 -> 1<x=y
        let r0 = Region::origin(2);
        let r1 = r0.time_successor(1);
        assert!(r1.satisfies(0, CmpOp::Lt, 1, 1) && r1.satisfies(0, CmpOp::Gt, 0, 1));
        let r2 = r1.time_successor(1);
        assert!(r2.satisfies(1, CmpOp::Eq, 1, 1));
        let r3 = r2.time_successor(1);
        assert!(r3.satisfies(0, CmpOp::Gt, 1, 1));
        assert_eq!(r3.time_successor(1), r3);
    }

    #[test]
    fn reset_splits_fraction_order() {
        let mut r = Region::origin(2).time_successor(2);
        r.reset(1);
        let s = r.time_successor(2);
        // y just left zero, x still has the larger fraction
        let s2 = s.time_successor(2);
        assert!(s2.satisfies(0, CmpOp::Eq, 1, 2));
        assert!(s2.satisfies(1, CmpOp::Lt, 1, 2) && s2.satisfies(1, CmpOp::Gt, 0, 2));
    }
}
