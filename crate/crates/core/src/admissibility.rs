//! Untimed-language comparison of two networks.
//!
//! Each network is abstracted into a finite automaton over action labels by
//! building its extrapolated zone graph. Both graphs share one scaling and one
//! extrapolation constant. Languages are prefix-closed: every state accepts.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::dbm::Dbm;
use crate::model::{LocationId, Network, Property, Sync};
use crate::zone::{NetworkMove, Scaling, SymbolicState, ZoneError, ZoneSemantics};

/// Finite automaton with optional silent (`None`) edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UntimedAutomaton {
    /// `None` if the network has no initial state at all.
    pub initial: Option<usize>,
    pub edges: Vec<Vec<(Option<String>, usize)>>,
}

impl UntimedAutomaton {
    pub fn state_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn alphabet(&self) -> BTreeSet<String> {
        self.edges.iter().flatten().filter_map(|(l, _)| l.clone()).collect()
    }

    fn closure(&self, set: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<usize> = set.into_iter().collect();
        while let Some(s) = stack.pop() {
            if out.insert(s) {
                for (l, t) in &self.edges[s] {
                    if l.is_none() {
                        stack.push(*t);
                    }
                }
            }
        }
        out
    }

    fn start(&self) -> BTreeSet<usize> {
        self.initial.map(|i| self.closure([i])).unwrap_or_default()
    }

    fn step(&self, set: &BTreeSet<usize>, label: &str) -> BTreeSet<usize> {
        let next = set
            .iter()
            .flat_map(|s| self.edges[*s].iter())
            .filter(|(l, _)| l.as_deref() == Some(label))
            .map(|(_, t)| *t);
        self.closure(next)
    }

    /// Observable labels enabled from a set of states.
    fn enabled(&self, set: &BTreeSet<usize>) -> BTreeSet<String> {
        set.iter()
            .flat_map(|s| self.edges[*s].iter())
            .filter_map(|(l, _)| l.clone())
            .collect()
    }

    /// Membership in the prefix-closed language.
    pub fn accepts(&self, word: &[String]) -> bool {
        let mut cur = self.start();
        if cur.is_empty() {
            return false;
        }
        for w in word {
            cur = self.step(&cur, w);
            if cur.is_empty() {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissibilityOptions {
    pub max_states: usize,
    /// Budget on explored pairs of determinized state sets.
    pub max_pairs: usize,
    /// Treat named internal actions as observable.
    pub visible_internal: bool,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        AdmissibilityOptions {
            max_states: 200_000,
            max_pairs: 200_000,
            visible_internal: false,
        }
    }
}

pub fn move_label(network: &Network, mv: &NetworkMove, visible_internal: bool) -> Option<String> {
    match mv {
        NetworkMove::Sync { .. } => mv.label(network),
        NetworkMove::Internal { automaton, transition } => match &network.automaton(*automaton).transitions[*transition].sync {
            Sync::Internal(Some(name)) if visible_internal => Some(name.clone()),
            _ => None,
        },
    }
}

/// Zone graph with extrapolation; states are identified by exact equality.
pub fn build_untimed(sem: &ZoneSemantics, opts: AdmissibilityOptions) -> Result<UntimedAutomaton, ZoneError> {
    let mut index: HashMap<(Vec<LocationId>, Dbm), usize> = HashMap::new();
    let mut states: Vec<SymbolicState> = Vec::new();
    let mut edges: Vec<Vec<(Option<String>, usize)>> = Vec::new();
    let Some(mut init) = sem.initial_exact()? else {
        return Ok(UntimedAutomaton { initial: None, edges });
    };
    sem.extrapolate(&mut init);
    index.insert((init.locations.clone(), init.zone.clone()), 0);
    states.push(init);
    edges.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let state = states[i].clone();
        for mv in sem.moves(&state.locations) {
            let Some(mut next) = sem.successor_exact(&state, &mv)? else {
                continue;
            };
            sem.extrapolate(&mut next);
            let key = (next.locations.clone(), next.zone.clone());
            let j = match index.get(&key) {
                Some(j) => *j,
                None => {
                    if states.len() >= opts.max_states {
                        return Err(ZoneError::Exhausted(opts.max_states));
                    }
                    let j = states.len();
                    index.insert(key, j);
                    states.push(next);
                    edges.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            edges[i].push((move_label(sem.network, &mv, opts.visible_internal), j));
        }
    }
    Ok(UntimedAutomaton { initial: Some(0), edges })
}

/// Scaling and extrapolation constant shared by several networks.
pub fn shared_semantics<'a>(networks: &[&'a Network], props: &[&Property]) -> Result<Vec<ZoneSemantics<'a>>, ZoneError> {
    let scaling = Scaling::for_networks(networks, props);
    let mut k = 0;
    for n in networks {
        k = k.max(scaling.scale(&n.max_constant())?);
    }
    for p in props {
        k = k.max(scaling.scale(&p.max_constant())?);
    }
    Ok(networks.iter().map(|n| ZoneSemantics::new(n, scaling.clone(), k)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    /// Shortest label sequence in exactly one of the two languages.
    Witness(Vec<String>),
}

/// Language equivalence by breadth-first search over pairs of determinized
/// state sets. The witness is a shortest distinguishing word.
pub fn equivalent(a: &UntimedAutomaton, b: &UntimedAutomaton, max_pairs: usize) -> Result<Equivalence, ZoneError> {
    let (sa, sb) = (a.start(), b.start());
    if sa.is_empty() != sb.is_empty() {
        return Ok(Equivalence::Witness(vec![]));
    }
    if sa.is_empty() {
        return Ok(Equivalence::Equal);
    }
    type Pair = (BTreeSet<usize>, BTreeSet<usize>);
    let mut parent: BTreeMap<Pair, Option<(Pair, String)>> = BTreeMap::new();
    let start = (sa, sb);
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([start]);
    let word_to = |parent: &BTreeMap<Pair, Option<(Pair, String)>>, mut p: Pair| {
        let mut word = Vec::new();
        while let Some(Some((prev, l))) = parent.get(&p) {
            word.push(l.clone());
            p = prev.clone();
        }
        word.reverse();
        word
    };
    while let Some(pair) = queue.pop_front() {
        let labels: BTreeSet<String> = a.enabled(&pair.0).union(&b.enabled(&pair.1)).cloned().collect();
        for l in labels {
            let na = a.step(&pair.0, &l);
            let nb = b.step(&pair.1, &l);
            if na.is_empty() != nb.is_empty() {
                let mut w = word_to(&parent, pair.clone());
                w.push(l);
                return Ok(Equivalence::Witness(w));
            }
            let next = (na, nb);
            if !parent.contains_key(&next) {
                if parent.len() >= max_pairs {
                    return Err(ZoneError::Exhausted(max_pairs));
                }
                parent.insert(next.clone(), Some((pair.clone(), l)));
                queue.push_back(next);
            }
        }
    }
    Ok(Equivalence::Equal)
}

/// Does `repaired` have the same untimed language as `original`?
pub fn admissible(
    original: &Network,
    repaired: &Network,
    props: &[&Property],
    opts: AdmissibilityOptions,
) -> Result<Equivalence, ZoneError> {
    let sems = shared_semantics(&[original, repaired], props)?;
    let a = build_untimed(&sems[0], opts)?;
    let b = build_untimed(&sems[1], opts)?;
    equivalent(&a, &b, opts.max_pairs)
}
