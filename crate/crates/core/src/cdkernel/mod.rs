//! Orthonormal bases and Christoffel-Darboux kernels for reference measures
//! on balls, simplices and cubes, their products, and the upper-bound
//! hierarchies built from them.

mod basis;
mod kernel;
mod measure;
mod upper;

use thiserror::Error;

use crate::hierarchy::HierarchyError;
use crate::polycore::PolyError;
use crate::semialg::SetError;

pub use basis::{default_max_degree, graded_decompose, orthonormal_basis, GradedComponents, KernelBasis, ProductBasis, GRAM_EIGEN_FLOOR};
pub use kernel::{kernel_eval, kernel_slice, operator_apply, KernelSpan, KernelWeights, WeightDiagnostic};
pub use measure::{ProductMeasure, ReferenceMeasure};
pub use upper::{harmonic_constant_bound, kernel_slice_check, upper_bound_kernel, upper_bound_sdp, HarmonicBound, SliceCheck, UpperBound};

/// Closed-form moment ∫ x^α dμ of the reference measure on a simple set.
pub fn reference_moments(kind: crate::semialg::SimpleKind, n: usize, scale: f64, alpha: &[u32]) -> Result<f64, KernelError> {
    let factor = crate::semialg::SimpleFactor::new(kind, n, scale)?;
    ReferenceMeasure::new(factor).moment(alpha)
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("expected {expected} entries, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("degree {degree} exceeds the available maximum {max}")]
    DegreeOverflow { degree: usize, max: usize },
    #[error("moment Gram matrix is ill-conditioned at degree {degree} (min eigenvalue {min_eigenvalue:.3e})")]
    IllConditioned { degree: usize, min_eigenvalue: f64 },
    #[error("invalid kernel weights: {0}")]
    InvalidWeights(String),
    #[error("operator has a zero eigenvalue on component {0:?}")]
    ZeroEigenvalue(Vec<usize>),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] sdpcore::SdpError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}
