//! Optimal sampling design: choose `K` of `N` candidate samples so that the
//! weighted sum of Cramér-Rao bounds of the selected design is minimal.
//!
//! The solver maximizes the Lagrange dual of the semidefinite formulation by
//! projected subgradient ascent ([`solver`]), with each dual block projected
//! onto a PSD slice through a scalar bisection ([`projection`]). An
//! exhaustive search ([`oracle`]) provides ground truth for small instances.

pub mod error;
pub mod matrix;
pub mod oracle;
pub mod problem;
pub mod projection;
pub mod solver;

pub use error::{Error, Result};
pub use matrix::{frobenius_inner, SymMatrix};
pub use oracle::{exhaustive_best_subset, OracleConfig, OracleResult};
pub use problem::{load_instance, save_instance, validate, ModelSpec, ProblemInstance, SelectionWeights};
pub use projection::{
    constraint_residual, project_constrained, project_psd, ConstraintSpec, ProjectionConfig,
    ProjectionReport,
};
pub use solver::{solve, DualAscent, DualState, SolverConfig, SolverResult, TraceRecord};
