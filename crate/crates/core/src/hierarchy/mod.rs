//! Lower-bound relaxations: moment and SOS sides of the preordering,
//! quadratic-module and reduced hierarchies.

mod build;
mod solve;

use std::fmt;
use std::str::FromStr;

use sdpcore::{SdpError, SolverOptions, Status};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::momentkit::{Certificate, MomentError};

pub use build::{build_moment_relaxation, build_relaxation, build_sos_relaxation, min_level, BlockRole, Relaxation};
pub use solve::{
    certificate_extract, run_ladder, solve_relaxation, CertificateTerm, ExtractedCertificate, Ladder, LadderRow,
    RelaxationResult, SolvedRelaxation, TermBody,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Moment,
    Sos,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Moment => "moment",
            Side::Sos => "sos",
        })
    }
}

impl FromStr for Side {
    type Err = HierarchyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "moment" => Ok(Side::Moment),
            "sos" => Ok(Side::Sos),
            other => Err(HierarchyError::Invalid(format!("unknown side '{other}' (expected moment or sos)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HierarchyKind {
    pub certificate: Certificate,
    pub side: Side,
}

impl fmt::Display for HierarchyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.certificate, self.side)
    }
}

/// Solver runs this many times tighter than the reporting tolerance.
pub const SOLVER_TIGHTENING: f64 = 1e-1;

#[derive(Debug, Clone)]
pub struct HierarchyOptions {
    /// Accuracy promised for reported bounds; consistency checks use 2·tol.
    pub tol: f64,
    pub solver: SolverOptions,
    /// Cap on s(n, r), the order of the largest PSD block.
    pub max_psd_size: usize,
    /// Cap on m for product-based certificates (2^m products).
    pub max_product_generators: usize,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self::with_tol(SolverOptions::default().tol)
    }
}

impl HierarchyOptions {
    /// ADMM residual tolerances translate into bound errors a few times
    /// larger, so the solver is driven to `tol · SOLVER_TIGHTENING`.
    pub fn with_tol(tol: f64) -> Self {
        HierarchyOptions {
            tol,
            solver: SolverOptions { max_iters: 200_000, ..SolverOptions::with_tol(tol * SOLVER_TIGHTENING) },
            max_psd_size: 200,
            max_product_generators: 6,
        }
    }
}

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("level {level} is below the minimal level {needed}")]
    LevelTooLow { level: usize, needed: usize },
    #[error("PSD block of order {size} exceeds the cap {cap}")]
    PsdTooLarge { size: usize, cap: usize },
    #[error("{count} inequalities give too many products (cap {cap})")]
    TooManyGenerators { count: usize, cap: usize },
    #[error("objective has {found} variables, set has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("solver finished with status {0}")]
    NotOptimal(Status),
    #[error("operation needs the other side of the relaxation")]
    WrongSide,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] SdpError),
    #[error(transparent)]
    Moment(#[from] MomentError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::Polynomial;
    use crate::semialg::{make_catalog_set, Catalog};

    fn kind(c: Certificate, s: Side) -> HierarchyKind {
        HierarchyKind { certificate: c, side: s }
    }

    fn interval() -> crate::semialg::SemiAlgebraicSet {
        make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap()
    }

    #[test]
    fn linear_on_interval_all_kinds() {
        let f = Polynomial::var(1, 0);
        let opts = HierarchyOptions::default();
        for c in [Certificate::T, Certificate::Q, Certificate::R] {
            for s in [Side::Moment, Side::Sos] {
                let out = solve_relaxation(&f, &interval(), kind(c, s), 1, &opts).unwrap();
                assert!((out.result.bound + 1.0).abs() < 1e-6, "{c}/{s}: {}", out.result.bound);
            }
        }
    }

    #[test]
    fn square_on_interval() {
        let f = Polynomial::from_terms(1, vec![(vec![2], 1.0)]).unwrap();
        let out = solve_relaxation(&f, &interval(), kind(Certificate::T, Side::Moment), 1, &HierarchyOptions::default()).unwrap();
        assert!(out.result.bound.abs() < 1e-6);
    }

    #[test]
    fn constant_objective() {
        let f = Polynomial::constant(2, 5.0);
        let x = make_catalog_set(&Catalog::Simplex { n: 2, size: 1.0 }).unwrap();
        for c in [Certificate::T, Certificate::Q, Certificate::R] {
            let out = solve_relaxation(&f, &x, kind(c, Side::Sos), 1, &HierarchyOptions::default()).unwrap();
            assert!((out.result.bound - 5.0).abs() < 1e-6);
        }
    }

    #[test]
    fn level_too_low() {
        let f = Polynomial::from_terms(1, vec![(vec![4], 1.0)]).unwrap();
        let err = build_sos_relaxation(&f, &interval(), Certificate::Q, 1, &HierarchyOptions::default()).unwrap_err();
        assert!(matches!(err, HierarchyError::LevelTooLow { needed: 2, .. }));
    }

    #[test]
    fn certificate_on_circle() {
        let x = make_catalog_set(&Catalog::Sphere { n: 2, radius: 1.0 }).unwrap();
        let f = Polynomial::var(2, 0);
        let out = solve_relaxation(&f, &x, kind(Certificate::Q, Side::Sos), 1, &HierarchyOptions::default()).unwrap();
        let cert = certificate_extract(&out).unwrap();
        assert!((cert.bound + 1.0).abs() < 1e-6);
        assert!(cert.residual < 1e-6, "{}", cert.residual);
    }

    #[test]
    fn quartic_ladder() {
        let f = Polynomial::from_terms(1, vec![(vec![4], 1.0), (vec![2], -1.0)]).unwrap();
        let ladder = run_ladder(&f, &interval(), Certificate::Q, 2..=3, &HierarchyOptions::default()).unwrap();
        assert!(ladder.monotonicity_violations.is_empty());
        for row in &ladder.rows {
            let lb = row.sos.as_ref().unwrap().bound;
            assert!((lb + 0.25).abs() < 1e-5, "{lb}");
            assert!(row.gap.unwrap() < 1e-5);
        }
    }
}
