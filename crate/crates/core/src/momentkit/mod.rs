//! Truncated moment sequences, moment and localizing matrices, liftings and
//! linear transports.

mod lift;
mod sequence;
mod specs;

use thiserror::Error;

use crate::semialg::SetError;

pub use lift::{lift_sequence, lifted_set, lifted_violation, LiftedSequence, LiftedSet};
pub use sequence::{sequence_from_measure, DiscreteMeasure, TruncatedSequence};
pub use specs::{membership_violation, preordering_products, Certificate, ConstraintKind, LocalizingSpec};

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("degree {degree} exceeds sequence order {order}")]
    DegreeOverflow { degree: usize, order: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("level {level} is too low, need at least {needed}")]
    LevelTooLow { level: usize, needed: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Set(#[from] SetError),
}
