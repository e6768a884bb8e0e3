use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use sdpcore::{smat, Block, Solution, Status};
use serde::Serialize;

use super::build::{build_relaxation, BlockRole, Relaxation};
use super::{HierarchyError, HierarchyKind, HierarchyOptions, Side};
use crate::momentkit::{Certificate, ConstraintKind, TruncatedSequence};
use crate::polycore::{basis_size, enumerate_monomials, Polynomial};
use crate::semialg::SemiAlgebraicSet;

/// Bound reported by one relaxation solve.
#[derive(Debug, Clone, Serialize)]
pub struct RelaxationResult {
    pub level: usize,
    pub certificate: Certificate,
    pub side: Side,
    /// lb (SOS side) or mlb (moment side).
    pub bound: f64,
    #[serde(serialize_with = "status_str")]
    pub status: Status,
    /// Solver's |primal − dual| for this program.
    pub gap: f64,
    pub iterations: usize,
    pub seconds: f64,
}

fn status_str<S: serde::Serializer>(s: &Status, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&s.to_string())
}

/// Solve output plus everything needed to read certificates or pseudo-moments.
#[derive(Debug, Clone)]
pub struct SolvedRelaxation {
    pub relaxation: Relaxation,
    pub solution: Solution,
    pub result: RelaxationResult,
}

impl SolvedRelaxation {
    /// Moment side: the pseudo-moment vector y.
    pub fn pseudo_moments(&self) -> Result<TruncatedSequence, HierarchyError> {
        if self.relaxation.kind.side != Side::Moment {
            return Err(HierarchyError::WrongSide);
        }
        let p = &self.relaxation.program;
        let y = p.block_slice(&self.solution.x, 0).to_vec();
        Ok(TruncatedSequence::new(self.relaxation.n, 2 * self.relaxation.level, y)?)
    }
}

/// Builds and solves one side at level r.
pub fn solve_relaxation(
    f: &Polynomial,
    set: &SemiAlgebraicSet,
    kind: HierarchyKind,
    r: usize,
    opts: &HierarchyOptions,
) -> Result<SolvedRelaxation, HierarchyError> {
    let start = Instant::now();
    let relaxation = build_relaxation(f, set, kind, r, opts)?;
    let solution = sdpcore::solve(&relaxation.program, &opts.solver)?;
    let bound = match kind.side {
        Side::Moment => solution.primal_value,
        Side::Sos => -solution.primal_value,
    };
    let result = RelaxationResult {
        level: r,
        certificate: kind.certificate,
        side: kind.side,
        bound,
        status: solution.status,
        gap: (solution.primal_value - solution.dual_value).abs(),
        iterations: solution.iterations,
        seconds: start.elapsed().as_secs_f64(),
    };
    log::debug!("{kind} r={r}: bound {bound:.9} ({}, {} iterations)", solution.status, solution.iterations);
    Ok(SolvedRelaxation { relaxation, solution, result })
}

/// Multiplier of one certificate term.
#[derive(Debug, Clone)]
pub enum TermBody {
    /// σ_J = v'Gv over the monomials of degree ≤ matrix order.
    Gram(DMatrix<f64>),
    /// Free polynomial multiplier of an equality.
    Multiplier(Polynomial),
}

#[derive(Debug, Clone)]
pub struct CertificateTerm {
    /// g_J, h_i or h_i².
    pub weight: Polynomial,
    pub body: TermBody,
}

impl CertificateTerm {
    /// weight · multiplier as a polynomial.
    pub fn expand(&self) -> Polynomial {
        let n = self.weight.n();
        let mult = match &self.body {
            TermBody::Multiplier(p) => p.clone(),
            TermBody::Gram(g) => {
                let size = g.nrows();
                let d = (0..).find(|&d| basis_size(n, d) >= size).unwrap_or(0);
                let basis = enumerate_monomials(n, d);
                let mut p = Polynomial::zero(n);
                for i in 0..size {
                    for j in 0..size {
                        p.add_term(basis.monomial_at(i).add(basis.monomial_at(j)), g[(i, j)]);
                    }
                }
                p
            }
        };
        &self.weight * &mult
    }
}

/// f − c* = Σ terms up to `residual` = ‖f − c* − Σ terms‖₁.
#[derive(Debug, Clone)]
pub struct ExtractedCertificate {
    pub bound: f64,
    pub terms: Vec<CertificateTerm>,
    pub residual: f64,
}

/// Reads Gram matrices and multipliers off an optimal SOS-side solve.
pub fn certificate_extract(solved: &SolvedRelaxation) -> Result<ExtractedCertificate, HierarchyError> {
    let relax = &solved.relaxation;
    if relax.kind.side != Side::Sos {
        return Err(HierarchyError::WrongSide);
    }
    if solved.solution.status != Status::Optimal {
        return Err(HierarchyError::NotOptimal(solved.solution.status));
    }
    let p = &relax.program;
    let x = &solved.solution.x;
    let n = relax.n;
    let bound = x[0];
    let mut terms = Vec::new();
    for (bi, role) in relax.roles.iter().enumerate() {
        let vals = p.block_slice(x, bi);
        match (role, p.blocks()[bi]) {
            (BlockRole::Psd { spec }, Block::Psd(size)) => {
                terms.push(CertificateTerm { weight: relax.specs[*spec].weight.clone(), body: TermBody::Gram(smat(vals, size)) });
            }
            (BlockRole::Multiplier { spec }, _) => {
                let s = &relax.specs[*spec];
                let (weight, mult) = match s.kind {
                    ConstraintKind::ScalarZero => (s.weight.clone(), Polynomial::constant(n, vals[0])),
                    _ => {
                        let basis = enumerate_monomials(n, 2 * s.matrix_order);
                        let mut m = Polynomial::zero(n);
                        for (a, v) in basis.iter().zip(vals) {
                            m.add_term(a.clone(), *v);
                        }
                        (s.weight.clone(), m)
                    }
                };
                terms.push(CertificateTerm { weight, body: TermBody::Multiplier(mult) });
            }
            _ => {}
        }
    }
    let mut rest = &relax.objective - &Polynomial::constant(n, bound);
    for t in &terms {
        rest = &rest - &t.expand();
    }
    Ok(ExtractedCertificate { bound, terms, residual: rest.l1_norm() })
}

/// One level of a ladder with both sides.
#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub level: usize,
    pub sos: Option<RelaxationResult>,
    pub moment: Option<RelaxationResult>,
    /// |mlb − lb|
    pub gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ladder {
    pub certificate: Certificate,
    pub rows: Vec<LadderRow>,
    /// Levels r whose bound dropped below level r − 1 by more than 2·tol.
    pub monotonicity_violations: Vec<usize>,
}

fn side_result(f: &Polynomial, set: &SemiAlgebraicSet, kind: HierarchyKind, r: usize, opts: &HierarchyOptions) -> Result<RelaxationResult, HierarchyError> {
    let solved = solve_relaxation(f, set, kind, r, opts)?;
    if solved.result.status == Status::InfeasibleCertificate {
        return Err(HierarchyError::NotOptimal(Status::InfeasibleCertificate));
    }
    Ok(solved.result)
}

/// Both sides at every level in `levels`; levels are solved concurrently.
pub fn run_ladder(
    f: &Polynomial,
    set: &SemiAlgebraicSet,
    cert: Certificate,
    levels: std::ops::RangeInclusive<usize>,
    opts: &HierarchyOptions,
) -> Result<Ladder, HierarchyError> {
    if levels.is_empty() {
        return Err(HierarchyError::Invalid("empty level range".into()));
    }
    let levels: Vec<usize> = levels.collect();
    let rows: Vec<LadderRow> = levels
        .par_iter()
        .map(|&r| {
            let sos = side_result(f, set, HierarchyKind { certificate: cert, side: Side::Sos }, r, opts);
            let moment = side_result(f, set, HierarchyKind { certificate: cert, side: Side::Moment }, r, opts);
            let error = match (&sos, &moment) {
                (Err(e), _) | (_, Err(e)) => Some(format!("level {r}: {e}")),
                _ => None,
            };
            let (sos, moment) = (sos.ok(), moment.ok());
            let gap = match (&sos, &moment) {
                (Some(s), Some(m)) => Some((m.bound - s.bound).abs()),
                _ => None,
            };
            LadderRow { level: r, sos, moment, gap, error }
        })
        .collect();
    let tol = 2.0 * opts.tol;
    let mut violations = Vec::new();
    for w in rows.windows(2) {
        for side in [Side::Sos, Side::Moment] {
            let get = |row: &LadderRow| match side {
                Side::Sos => row.sos.as_ref().map(|b| b.bound),
                Side::Moment => row.moment.as_ref().map(|b| b.bound),
            };
            if let (Some(a), Some(b)) = (get(&w[0]), get(&w[1])) {
                if b < a - tol && !violations.contains(&w[1].level) {
                    violations.push(w[1].level);
                }
            }
        }
    }
    Ok(Ladder { certificate: cert, rows, monotonicity_violations: violations })
}
