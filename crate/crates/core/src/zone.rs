//! Zone-graph exploration of a network: successor computation shared with the
//! admissibility check, and breadth-first reachability that returns a shortest
//! symbolic trace to a property violation.

use std::collections::{HashMap, VecDeque};

use num::{BigInt, Integer, One, ToPrimitive};
use thiserror::Error;

use crate::dbm::{Bound, Dbm};
use crate::model::{AutomatonId, ClockConstraint, CmpOp, LocationId, Network, Property, Rational, Sync};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZoneError {
    #[error("state-space budget of {0} symbolic states exhausted")]
    Exhausted(usize),
    #[error("clock constant does not fit the zone representation")]
    ConstantOverflow,
}

/// One step of the network: a single internal transition or a binary
/// handshake (sender and receiver move together).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetworkMove {
    Internal {
        automaton: AutomatonId,
        transition: usize,
    },
    Sync {
        sender: (AutomatonId, usize),
        receiver: (AutomatonId, usize),
    },
}

impl NetworkMove {
    pub fn parts(&self) -> Vec<(AutomatonId, usize)> {
        match *self {
            NetworkMove::Internal { automaton, transition } => vec![(automaton, transition)],
            NetworkMove::Sync { sender, receiver } => vec![sender, receiver],
        }
    }

    /// Rebuild a move from its fired transitions (in any order).
    pub fn from_parts(network: &Network, parts: &[(AutomatonId, usize)]) -> Option<NetworkMove> {
        match parts {
            [(a, t)] => match network.automaton(*a).transitions[*t].sync {
                Sync::Internal(_) => Some(NetworkMove::Internal {
                    automaton: *a,
                    transition: *t,
                }),
                _ => None,
            },
            [p, q] if p.0 != q.0 => {
                let sync = |x: &(AutomatonId, usize)| &network.automaton(x.0).transitions[x.1].sync;
                match (sync(p), sync(q)) {
                    (Sync::Send(c), Sync::Receive(d)) if c == d => Some(NetworkMove::Sync { sender: *p, receiver: *q }),
                    (Sync::Receive(d), Sync::Send(c)) if c == d => Some(NetworkMove::Sync { sender: *q, receiver: *p }),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Observable label: the channel for a handshake, the action name for a
    /// labelled internal transition.
    pub fn label(&self, network: &Network) -> Option<String> {
        match *self {
            NetworkMove::Internal { automaton, transition } => match &network.automaton(automaton).transitions[transition].sync {
                Sync::Internal(name) => name.clone(),
                _ => None,
            },
            NetworkMove::Sync { sender, .. } => match network.automaton(sender.0).transitions[sender.1].sync {
                Sync::Send(c) => Some(network.channels[c.0].clone()),
                _ => None,
            },
        }
    }

    pub fn is_sync(&self) -> bool {
        matches!(self, NetworkMove::Sync { .. })
    }
}

/// A symbolic timed trace: the fired moves and the location vectors
/// `λ_0 .. λ_n` visited before, between and after them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicTrace {
    pub moves: Vec<NetworkMove>,
    pub locations: Vec<Vec<LocationId>>,
}

impl SymbolicTrace {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn final_locations(&self) -> &[LocationId] {
        self.locations.last().expect("trace has at least one location vector")
    }
}

/// Integer view of a network's constants: every bound multiplied by a common
/// factor so that the DBM can work over integers.
#[derive(Debug, Clone)]
pub struct Scaling {
    factor: BigInt,
}

impl Scaling {
    /// Smallest factor turning every constant of the given networks and
    /// properties into an integer.
    pub fn for_constants<'a>(constants: impl IntoIterator<Item = &'a Rational>) -> Scaling {
        let mut factor = BigInt::one();
        for c in constants {
            factor = factor.lcm(c.denom());
        }
        Scaling { factor }
    }

    pub fn for_network(network: &Network, props: &[&Property]) -> Scaling {
        Scaling::for_networks(&[network], props)
    }

    pub fn for_networks(networks: &[&Network], props: &[&Property]) -> Scaling {
        let mut all = Vec::new();
        for n in networks {
            for site in n.constraint_sites() {
                all.push(n.constraint(site).bound.clone());
            }
        }
        for p in props {
            collect_property_constants(p, &mut all);
        }
        Scaling::for_constants(all.iter())
    }

    pub fn scale(&self, r: &Rational) -> Result<i64, ZoneError> {
        let scaled = r * Rational::from_integer(self.factor.clone());
        debug_assert!(scaled.is_integer());
        scaled
            .to_integer()
            .to_i64()
            .filter(|v| v.abs() < (1 << 40))
            .ok_or(ZoneError::ConstantOverflow)
    }
}

fn collect_property_constants(p: &Property, out: &mut Vec<Rational>) {
    match p {
        Property::Clock(c) => out.push(c.bound.clone()),
        Property::Not(q) => collect_property_constants(q, out),
        Property::And(a, b) | Property::Or(a, b) => {
            collect_property_constants(a, out);
            collect_property_constants(b, out);
        }
        _ => {}
    }
}

/// Intersect a zone with one clock constraint (integer-scaled).
pub fn constrain(zone: &mut Dbm, c: &ClockConstraint, scaling: &Scaling) -> Result<(), ZoneError> {
    let x = c.clock.0 + 1;
    let n = scaling.scale(&c.bound)?;
    match c.op {
        CmpOp::Lt => zone.and(x, 0, Bound::lt(n)),
        CmpOp::Le => zone.and(x, 0, Bound::le(n)),
        CmpOp::Eq => {
            zone.and(x, 0, Bound::le(n));
            zone.and(0, x, Bound::le(-n));
        }
        CmpOp::Ge => zone.and(0, x, Bound::le(-n)),
        CmpOp::Gt => zone.and(0, x, Bound::lt(-n)),
    }
    Ok(())
}

/// Successor computation over one network with a fixed scaling and
/// extrapolation constant.
#[derive(Debug, Clone)]
pub struct ZoneSemantics<'a> {
    pub network: &'a Network,
    pub scaling: Scaling,
    /// Maximal constant, already scaled.
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    pub locations: Vec<LocationId>,
    pub zone: Dbm,
}

impl<'a> ZoneSemantics<'a> {
    pub fn new(network: &'a Network, scaling: Scaling, k: i64) -> Self {
        ZoneSemantics { network, scaling, k }
    }

    /// Semantics with scaling and constant computed from the network and the
    /// given properties alone.
    pub fn for_network(network: &'a Network, props: &[&Property]) -> Result<Self, ZoneError> {
        let scaling = Scaling::for_network(network, props);
        let mut k = scaling.scale(&network.max_constant())?;
        for p in props {
            k = k.max(scaling.scale(&p.max_constant())?);
        }
        Ok(ZoneSemantics::new(network, scaling, k))
    }

    fn clocks(&self) -> usize {
        self.network.clocks.len()
    }

    pub fn is_urgent(&self, locs: &[LocationId]) -> bool {
        locs.iter().enumerate().any(|(a, l)| self.network.automata[a].locations[l.0].urgent)
    }

    fn apply_invariants(&self, zone: &mut Dbm, locs: &[LocationId]) -> Result<(), ZoneError> {
        for (a, l) in locs.iter().enumerate() {
            for c in &self.network.automata[a].locations[l.0].invariant {
                constrain(zone, c, &self.scaling)?;
            }
        }
        Ok(())
    }

    /// Let time pass (unless urgent) under the invariants of `locs`.
    fn close(&self, zone: &mut Dbm, locs: &[LocationId]) -> Result<(), ZoneError> {
        self.apply_invariants(zone, locs)?;
        if !self.is_urgent(locs) {
            zone.up();
            self.apply_invariants(zone, locs)?;
        }
        Ok(())
    }

    /// Initial symbolic state before extrapolation, or `None` if the initial
    /// invariants are unsatisfiable.
    pub fn initial_exact(&self) -> Result<Option<SymbolicState>, ZoneError> {
        let locations = self.network.initial_locations();
        let mut zone = Dbm::zero(self.clocks());
        self.close(&mut zone, &locations)?;
        Ok((!zone.is_empty()).then_some(SymbolicState { locations, zone }))
    }

    /// Moves enabled by the location vector, in lexicographic
    /// (automaton, transition) order.
    pub fn moves(&self, locs: &[LocationId]) -> Vec<NetworkMove> {
        let mut out = Vec::new();
        for (ai, aut) in self.network.automata.iter().enumerate() {
            for (ti, t) in aut.transitions.iter().enumerate() {
                if t.source != locs[ai] {
                    continue;
                }
                match t.sync {
                    Sync::Internal(_) => out.push(NetworkMove::Internal {
                        automaton: AutomatonId(ai),
                        transition: ti,
                    }),
                    Sync::Send(c) => {
                        for (bi, other) in self.network.automata.iter().enumerate() {
                            if bi == ai {
                                continue;
                            }
                            for (ui, u) in other.transitions.iter().enumerate() {
                                if u.source == locs[bi] && u.sync == Sync::Receive(c) {
                                    out.push(NetworkMove::Sync {
                                        sender: (AutomatonId(ai), ti),
                                        receiver: (AutomatonId(bi), ui),
                                    });
                                }
                            }
                        }
                    }
                    Sync::Receive(_) => {}
                }
            }
        }
        out
    }

    /// Successor through `mv`, before extrapolation.
    pub fn successor_exact(&self, state: &SymbolicState, mv: &NetworkMove) -> Result<Option<SymbolicState>, ZoneError> {
        let mut zone = state.zone.clone();
        let mut locations = state.locations.clone();
        let parts = mv.parts();
        for (a, t) in &parts {
            for c in &self.network.automaton(*a).transitions[*t].guard {
                constrain(&mut zone, c, &self.scaling)?;
            }
        }
        if zone.is_empty() {
            return Ok(None);
        }
        for (a, t) in &parts {
            let tr = &self.network.automaton(*a).transitions[*t];
            for r in &tr.resets {
                zone.reset(r.0 + 1);
            }
            locations[a.0] = tr.target;
        }
        self.close(&mut zone, &locations)?;
        Ok((!zone.is_empty()).then_some(SymbolicState { locations, zone }))
    }

    pub fn extrapolate(&self, state: &mut SymbolicState) {
        state.zone.extrapolate(self.k);
    }

    /// Does the zone contain a valuation violating the property?
    pub fn violates(&self, state: &SymbolicState, prop: &Property) -> Result<bool, ZoneError> {
        for term in prop.dnf(true, &state.locations) {
            let mut z = state.zone.clone();
            for c in &term {
                constrain(&mut z, c, &self.scaling)?;
            }
            if !z.is_empty() {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    Violated(SymbolicTrace),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub max_states: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { max_states: 200_000 }
    }
}

/// Breadth-first reachability of a state violating `prop`. The returned
/// trace has the minimum number of moves.
pub fn check(network: &Network, prop: &Property, opts: CheckOptions) -> Result<Verdict, ZoneError> {
    let sem = ZoneSemantics::for_network(network, &[prop])?;
    struct Node {
        state: SymbolicState,
        parent: Option<(usize, NetworkMove)>,
    }
    let Some(init) = sem.initial_exact()? else {
        return Ok(Verdict::Safe);
    };
    let mut nodes: Vec<Node> = Vec::new();
    let mut passed: HashMap<Vec<LocationId>, Vec<usize>> = HashMap::new();
    let mut queue = VecDeque::new();

    let trace_to = |nodes: &Vec<Node>, mut idx: usize| {
        let mut moves = Vec::new();
        let mut locations = vec![nodes[idx].state.locations.clone()];
        while let Some((p, mv)) = nodes[idx].parent {
            moves.push(mv);
            locations.push(nodes[p].state.locations.clone());
            idx = p;
        }
        moves.reverse();
        locations.reverse();
        SymbolicTrace { moves, locations }
    };

    let mut admit = |nodes: &mut Vec<Node>,
                     queue: &mut VecDeque<usize>,
                     mut state: SymbolicState,
                     parent: Option<(usize, NetworkMove)>|
     -> Result<Option<usize>, ZoneError> {
        if sem.violates(&state, prop)? {
            nodes.push(Node { state, parent });
            return Ok(Some(nodes.len() - 1));
        }
        sem.extrapolate(&mut state);
        let seen = passed.entry(state.locations.clone()).or_default();
        if seen.iter().any(|&i| state.zone.is_subset_of(&nodes[i].state.zone)) {
            return Ok(None);
        }
        if nodes.len() >= opts.max_states {
            return Err(ZoneError::Exhausted(opts.max_states));
        }
        nodes.push(Node { state, parent });
        let idx = nodes.len() - 1;
        seen.push(idx);
        queue.push_back(idx);
        Ok(None)
    };

    if let Some(bad) = admit(&mut nodes, &mut queue, init, None)? {
        return Ok(Verdict::Violated(trace_to(&nodes, bad)));
    }
    while let Some(idx) = queue.pop_front() {
        let state = nodes[idx].state.clone();
        for mv in sem.moves(&state.locations) {
            if let Some(next) = sem.successor_exact(&state, &mv)? {
                if let Some(bad) = admit(&mut nodes, &mut queue, next, Some((idx, mv)))? {
                    return Ok(Verdict::Violated(trace_to(&nodes, bad)));
                }
            }
        }
    }
    Ok(Verdict::Safe)
}
