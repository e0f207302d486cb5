//! Numerical laboratory for exponential gradient bounds of linear elliptic
//! and parabolic equations on strictly convex domains.
//!
//! The crate is `no_std` (with `alloc`). It carries the discretizations, the
//! linear solvers, every explicit comparison object used by the
//! maximum-principle arguments (barrier profile, planar and radial
//! supersolutions, positive multiplier, one-dimensional duality system) and
//! the checks that compare measured numerics against them. IO, configuration
//! and random sweeps live in the `gradlab` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod amg;
pub mod barrier;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod landis1d;
pub mod multiplier;
pub mod parabolic;
pub mod pde;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use barrier::{Barrier, BarrierMode, RadialSupersolution};
pub use elliptic::EllipticSolution;
pub use error::{Error, Result};
pub use geometry::{ConvexDomain, Grid, NodeKind, Point};
pub use multiplier::MultiplierResult;
pub use parabolic::{ParabolicRun, ParabolicSpec};
pub use pde::{BoundaryCondition, CoefficientSet, OperatorForm, ScalarField};
pub use solver::{SolveOutcome, SolverOptions};
pub use sparse::SparseOperator;
