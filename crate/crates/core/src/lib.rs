//! Implicit fourth-order compact finite-difference scheme for weakly
//! nonlinear 1-D parabolic and Schrodinger-type equations.
//!
//! Each time step solves the implicit nonlinear system by an explicit first
//! guess (Euler or a two-stage midpoint scheme) followed by pointwise
//! linearized relaxation. Richardson extrapolation over two grids lifts the
//! order from four to six.
//!
//! Modules, bottom-up:
//!
//! - [`mesh`]: grids, time ladders and grid functions
//! - [`algebra`]: node values (real, real pair, complex) and their 2x2 solves
//! - [`scheme`]: compact weights, node residual, linearized correction
//! - [`stepping`]: predictors, sweep orderings, per-step solve, integration
//! - [`problems`]: Fisher-KPP, FitzHugh-Nagumo, cubic NLSE and its soliton
//! - [`analysis`]: norms, references, convergence/Richardson tables, studies

pub mod algebra;
pub mod analysis;
pub mod error;
pub mod mesh;
pub mod problems;
pub mod scheme;
pub mod stepping;

pub use algebra::{ComponentKind, JacobianMode, LinearizationGuard, Mat2, NodeState, Pair, Weight};
pub use error::{Error, Result};
pub use mesh::{courant, make_grid, restrict, CourantNumber, Grid1D, GridFunction, TimeGrid};
pub use problems::{ProblemSpec, SolitonParams};
pub use scheme::{compact_coefficients, CompactCoefficients, Nonlinearity};
pub use stepping::{
    integrate, BoundaryData, PredictorKind, RelaxationConfig, RunReport, StepStats, SweepOrdering,
};
