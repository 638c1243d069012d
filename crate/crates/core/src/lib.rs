//! Equilibria of saturating flow networks.
//!
//! A network routes the output `x_i` of each node along the rows of a
//! substochastic matrix `P` and caps it by a capacity `w_i`. Equilibria solve
//!
//! ```text
//! x = S_w(P' x + c),   S_w(y)_i = min(max(y_i, 0), w_i)
//! ```
//!
//! for an external flow `c`. The crate computes the minimal and maximal
//! equilibria, decides uniqueness from the decomposition of the routing
//! graph, describes the full set when it is a segment, tracks systemic loss
//! along shock rays and integrates the continuous-time flow that converges
//! to the equilibrium set.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod graph;
pub mod model;
pub mod shock;
pub mod solver;
pub mod structure;

pub use error::{Error, Result};
pub use graph::{decompose, Decomposition, Sink};
pub use model::{from_liabilities, saturate, LiabilityData, Network, ValidationReport, Violation};
pub use solver::{
    equilibrium_bounds, maximal_equilibrium, minimal_equilibrium, node_partition, Bound,
    EquilibriumVector, NodePartition, SolveOptions,
};
pub use structure::{classify, equilibrium_set, nash_payments, Classification, EquilibriumSet};
