//! Dense conic solver for programs over products of PSD cones, nonnegative
//! orthants and free variables.
//!
//! Programs are stored in standard form `min cᵀx, Ax = b, x ∈ K`. PSD blocks
//! are packed with `√2`-scaled off-diagonals so the flattening is an isometry.

mod admm;
mod cone;
mod program;

pub use admm::{solve, Infeasibility, Residuals, Solution, SolverOptions, Status, WarmStart};
pub use cone::{min_eigenvalue, packed_min_eigenvalue, psd_project, smat, svec, svec_index, symmetric_eigen, Block};
pub use program::{ConicProgram, SparseMatrix};

#[derive(Debug, thiserror::Error)]
pub enum SdpError {
    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("parse error: {0}")]
    Parse(String),
}
