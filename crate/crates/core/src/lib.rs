//! Bregman projections by cut accumulation.
//!
//! Starting from `x0` and a polyhedron `C_0`, the iteration repeatedly takes
//! a point `y_n`, intersects the current set with the halfspace
//! `H(x_n, y_n) = {z : D(z, y_n) <= D(z, x_n)}` and re-projects `x0` onto
//! the result. With `y_n = T x_n` for a quasi Bregman nonexpansive,
//! fixed-point closed operator `T`, the iterates converge to the Bregman
//! projection of `x0` onto `Fix T`, diverge in norm, or hit an empty set.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod driver;
pub mod error;
pub mod legendre;
mod linalg;
mod multiplier;
pub mod operators;
pub mod oracle;
pub mod point;
pub mod projection;
pub mod scenario;
pub mod sets;
pub mod trace_io;

pub use driver::{
    run, verify_trace, DriverConfig, FnOracle, IterationTrace, OracleMap, Outcome, Violation,
};
pub use error::{Error, Result};
pub use legendre::{bregman_distance, legendre_by_name, Energy, ExpSum, Legendre};
pub use operators::{ConvexSet, LevelFunction, LevelSetProblem, ProxOracle};
pub use point::Point;
pub use projection::{project_cutset, InnerMethod, InnerSettings, Projection, ProjectionResult};
pub use scenario::ScenarioConfig;
pub use sets::{build_cut, Cut, CutSet, Halfspace};
pub use trace_io::RunSummary;
