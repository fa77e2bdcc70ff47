//! Mixed-precision LSQR for discrete linear ill-posed problems.
//!
//! The Golub–Kahan bidiagonalization runs in one floating-point format, the
//! Givens recurrence in binary64 and the solution update in a second format.
//! Around it sit the classical test problems, stopping rules, a precision
//! advisor and an experiment driver.

pub mod advisor;
pub mod bidiag;
pub mod error;
pub mod experiment;
pub mod lsqr;
pub mod operator;
pub mod precision;
pub mod problems;
pub mod stopping;

pub use advisor::AdvisorReport;
pub use bidiag::BidiagState;
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, RunSpec};
pub use lsqr::{solve, solve_system, SolverConfig, SolverHistory};
pub use operator::{BlurOperator, DenseMatrix, LinearOperator, Operator};
pub use precision::Precision;
pub use problems::{ProblemInstance, ProblemKind};
pub use stopping::{StopDecision, StopRule};
