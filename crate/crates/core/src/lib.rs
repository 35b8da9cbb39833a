//! Multi-crew repair scheduling for radial electrical distribution networks.
//!
//! The library models a damaged radial feeder, transforms it into a pair of
//! working graphs (a complete doubly weighted job graph and a precedence dag
//! over the jobs), assembles the scheduling problem as a mixed-integer
//! program, and solves it exactly with a branch-and-bound search over crew
//! tours. A rolling-horizon driver replans across restoration windows as new
//! damage reports arrive and repairs overrun their estimates.
//!
//! Pipeline overview:
//!
//! * [`net`]: the physical distribution network and its road counterpart.
//! * [`transform`]: line-graph construction, collapse of undamaged nodes,
//!   and all-pairs travel times.
//! * [`model`]: the MILP instance (variables, tagged constraint groups,
//!   MPS/LP export, assignment checking).
//! * [`solve`]: exact branch-and-bound, a brute-force oracle, and a
//!   domain-level schedule checker.
//! * [`horizon`]: rolling-window simulation with carryover and energization.
//! * [`feeders`]: IEEE 13/34/123-node fixtures and repair-time sampling.
//! * [`metrics`]: evaluation metrics (NAR, MAR, NUWT) and CSV emission.

pub mod feeders;
pub mod horizon;
pub mod metrics;
pub mod model;
pub mod net;
pub mod rng;
pub mod solve;
pub mod transform;

#[cfg(test)]
pub(crate) mod testutil;
