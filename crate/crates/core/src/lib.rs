//! Low-rank solver for trace-bounded semidefinite programs.
//!
//! The PSD variable is factored as `X = Y Y^T` with a thin `Y`, optimized
//! by an augmented Lagrangian method whose inner problems are solved by
//! L-BFGS with an exact (quartic) line search. Because the feasible set is
//! trace bounded, any dual vector certifies a suboptimality bound, which
//! drives early termination and rank growth.

pub mod alm;
pub mod error;
pub mod lanczos;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod rounding;
pub mod subsolver;

pub use alm::{solve, IterationRecord, SolveResult, SolverConfig, Status};
pub use error::{Error, Result};
pub use linalg::{Factor, RectMatrix, SparseSym};
pub use model::{Constraint, ConstraintKind, Cost, Problem};
pub use problems::Graph;
