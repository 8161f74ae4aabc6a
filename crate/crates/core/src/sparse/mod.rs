//! Compressed-row sparse matrices and the iterative solvers used by the
//! time stepper.

mod csr;
mod dirichlet;
mod precond;
mod solver;

use thiserror::Error;

pub use csr::CsrMatrix;
pub use dirichlet::{apply_dirichlet, project_zero_mean, project_zero_mean_in_place};
pub use precond::{Ilu0, Preconditioner};
pub use solver::{solve, solve_with_guess, Method, Solution, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("entry ({row}, {col}) out of range for a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("matrices do not share a sparsity pattern")]
    PatternMismatch,
    #[error("solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NotConverged {
        iterations: usize,
        residual: f64,
        /// Last iterate, so callers may decide to continue with it.
        solution: Vec<f64>,
    },
    #[error("zero or missing diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("duplicate constrained dof {0}")]
    DuplicateDof(usize),
    #[error("total weight is zero")]
    ZeroWeight,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}
