//! Model checking and syntactic repair of networks of timed automata.
//!
//! A counterexample trace found by the zone-based checker is encoded as a
//! linear constraint system over its delays. Syntactic variations of the
//! network become free variables or selectors of that system, and a partial
//! MaxSMT search finds the fewest modifications that make the trace safe.

pub mod admissibility;
pub mod dbm;
pub mod encode;
pub mod io;
pub mod lra;
pub mod model;
pub mod region;
pub mod repair;
pub mod seed;
pub mod variation;
pub mod zone;

pub use model::{
    Automaton, AutomatonId, ChannelId, ClockConstraint, ClockId, CmpOp, ConstraintSite, Location, LocationId, Network, Property, Rational,
    Sync, Transition,
};
pub use zone::{check, CheckOptions, SymbolicTrace, Verdict};
