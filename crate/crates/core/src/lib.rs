//! Branch-and-bound for mixed-integer conic programs with early termination
//! of node relaxations.
//!
//! Node relaxations are solved by a primal-dual subsolver (ADMM operator
//! splitting or an interior-point method). Every iterate carries conic
//! multipliers that are already dual feasible for the cone; only the linear
//! stationarity residual is off. [`correction`] cancels that residual through
//! the unconstrained multipliers, which turns the iterate into a dual-feasible
//! point whose objective is a valid lower bound on the node. Once that bound
//! reaches the incumbent, [`bnb`] prunes the node without finishing the solve.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod admm;
pub mod bnb;
pub mod cones;
pub mod correction;
pub mod error;
pub mod harness;
pub mod instances;
pub mod ipm;
pub mod iterate;
pub mod linalg;
pub mod problem;
pub mod sparse;

pub use error::{Error, Result};
pub use iterate::{Convention, DualIterate};
pub use problem::{ConeKind, ConeSpec, ConicProgram, IntegerVar, MicpProblem};
pub use sparse::CscMatrix;
