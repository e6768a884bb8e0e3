//! Basic semi-algebraic sets, the test-domain catalog, samplers and local solvers.

mod catalog;
mod descriptor;
pub mod localopt;
mod sampling;
mod set;

use thiserror::Error;

use crate::polycore::PolyError;

pub use catalog::{make_catalog_set, polytope_is_empty, rows_of, Catalog, SimpleFactor, SimpleKind, SimpleSetProduct};
pub use descriptor::{simple_factor, user_hint, SetDescriptor};
pub use localopt::{distance_to_set, estimate_minimum, LocalResult, LocalSolver, MinEstimate};
pub use sampling::{
    project_to_variety, radius_counterexample, random_in_box, sample_points, SampleReport, SampleStrategy, FEASIBILITY_TOL,
};
pub use set::{HintSource, LojasiewiczHint, SemiAlgebraicSet, SetFamily};

#[derive(Debug, Error)]
pub enum SetError {
    #[error("invalid set: {0}")]
    Invalid(String),
    #[error("point has dimension {found}, set lives in dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("sampler starved: {accepted} accepted out of {attempts} attempts")]
    Starvation { accepted: usize, attempts: usize },
    #[error("set has neither a radius nor explicit bounds to sample from")]
    NoBoundingBox,
    #[error(transparent)]
    Poly(#[from] PolyError),
}
