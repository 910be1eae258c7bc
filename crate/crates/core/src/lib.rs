//! Flow-through-tensor toolkit for multi-layer transportation networks.
//!
//! The crate chains OD demand, path flows, link flows and their travel times
//! through the incidence matrix `A` and the choice matrix `B`, and builds on
//! that chain for equilibrium assignment, exact sensitivities, multi-day
//! rotation analysis, two-block ADMM coordination and tensor decomposition.

pub mod adjoint;
pub mod admm;
pub mod network;
pub mod propagate;
pub mod rotation;
pub mod solvers;
pub mod tensor;

pub use network::{IncidenceSet, Network, PathSet};
pub use propagate::{FlowState, LinkPerformance, TimeState, VolumeDelay};
