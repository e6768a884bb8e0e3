//! Empirical geometry of moment bodies: inner samples of M_k(X), projections
//! onto them, support-function lower bounds on d_k and Łojasiewicz fits.

mod cone;
mod loj;
mod support;

use thiserror::Error;

use crate::hierarchy::HierarchyError;
use crate::momentkit::MomentError;
use crate::semialg::SetError;

pub use cone::{project_simplex, project_to_moment_set, sample_moment_cone, MomentConeSample, ProjectionResult, ATOM_TOL};
pub use loj::{cqc_check, linear_fit, lipschitz_bound, lojasiewicz_fit, CqcReport, LojasiewiczFit, CQC_FLOOR, MIN_EXTERIOR, SHELL};
pub use support::{direction_polynomial, hausdorff_lower_bound, random_directions, support_gap, HausdorffEstimate, SupportGap};

#[derive(Debug, Error)]
pub enum DistError {
    #[error("{0}")]
    Invalid(String),
    #[error("expected {expected} entries, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("only {found} usable sample points, need {needed}")]
    InsufficientSamples { found: usize, needed: usize },
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Poly(#[from] crate::polycore::PolyError),
}
