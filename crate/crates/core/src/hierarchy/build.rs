use sdpcore::{Block, ConicProgram, SparseMatrix};

use super::{HierarchyError, HierarchyKind, HierarchyOptions, Side};
use crate::momentkit::{preordering_products, Certificate, ConstraintKind, LocalizingSpec};
use crate::polycore::{basis_size, enumerate_monomials, MonomialBasis, Polynomial};
use crate::semialg::SemiAlgebraicSet;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Where each piece of a relaxation lives inside the flattened variable.
#[derive(Debug, Clone)]
pub enum BlockRole {
    /// Moment side: y ∈ ℝ^{s(n,2r)}. SOS side: the scalar c.
    Head,
    /// Gram or localizing slack block of a PSD spec.
    Psd { spec: usize },
    /// Coefficients of an equality multiplier on the SOS side.
    Multiplier { spec: usize },
}

/// A flattened relaxation and the bookkeeping needed to read its solution.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub kind: HierarchyKind,
    pub level: usize,
    pub n: usize,
    pub objective: Polynomial,
    pub specs: Vec<LocalizingSpec>,
    pub roles: Vec<BlockRole>,
    pub program: ConicProgram,
}

impl Relaxation {
    pub fn program(&self) -> &ConicProgram {
        &self.program
    }

    /// Block index holding the given role.
    pub fn block_of(&self, spec: usize) -> Option<usize> {
        self.roles.iter().position(|r| match r {
            BlockRole::Psd { spec: s } | BlockRole::Multiplier { spec: s } => *s == spec,
            BlockRole::Head => false,
        })
    }
}

/// Smallest admissible level: max{⌈f⌉, ⌈g_j⌉, ⌈h_i⌉}, and deg h_i for R.
pub fn min_level(f: &Polynomial, set: &SemiAlgebraicSet, cert: Certificate) -> usize {
    let mut need = f.half_degree().max(set.max_half_degree());
    if cert == Certificate::R {
        need = need.max(set.equalities().iter().map(Polynomial::degree).max().unwrap_or(0));
    }
    need.max(1)
}

fn check(f: &Polynomial, set: &SemiAlgebraicSet, kind: HierarchyKind, r: usize, opts: &HierarchyOptions) -> Result<(), HierarchyError> {
    if f.n() != set.n() {
        return Err(HierarchyError::Dimension { expected: set.n(), found: f.n() });
    }
    let need = min_level(f, set, kind.certificate);
    if r < need {
        return Err(HierarchyError::LevelTooLow { level: r, needed: need });
    }
    let size = basis_size(set.n(), r);
    if size > opts.max_psd_size {
        return Err(HierarchyError::PsdTooLarge { size, cap: opts.max_psd_size });
    }
    if kind.certificate != Certificate::Q && set.inequalities().len() > opts.max_product_generators {
        return Err(HierarchyError::TooManyGenerators { count: set.inequalities().len(), cap: opts.max_product_generators });
    }
    Ok(())
}

/// Coefficient of x^α in g·x^β over the degree-2r basis, as (rank, value) pairs.
fn shifted(g: &Polynomial, beta: &crate::polycore::MultiIndex) -> Vec<(usize, f64)> {
    g.terms().map(|(gam, c)| (gam.add(beta).graded_rank(), c)).collect()
}

/// Moment side: min ℓ_y(f) over y₀ = 1 and the localizing constraints.
///
/// Variables are y (free) followed by one PSD slack X_J per product with
/// rows svec(X_J) − svec(M(g_J y)) = 0; zero-type specs add rows ℓ_y(·) = 0.
pub fn build_moment_relaxation(
    f: &Polynomial,
    set: &SemiAlgebraicSet,
    cert: Certificate,
    r: usize,
    opts: &HierarchyOptions,
) -> Result<Relaxation, HierarchyError> {
    let kind = HierarchyKind { certificate: cert, side: Side::Moment };
    check(f, set, kind, r, opts)?;
    let n = set.n();
    let specs = preordering_products(set, r, cert);
    let ny = basis_size(n, 2 * r);
    let mut blocks = vec![Block::Free(ny)];
    let mut roles = vec![BlockRole::Head];
    let mut trip: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0)];
    let mut rhs = vec![1.0];
    let mut col = ny;
    let mut row = 1;
    let mut zero_rows: Vec<Polynomial> = Vec::new();
    for (si, s) in specs.iter().enumerate() {
        match s.kind {
            ConstraintKind::Psd => {
                let basis = enumerate_monomials(n, s.matrix_order);
                let size = basis.len();
                blocks.push(Block::Psd(size));
                roles.push(BlockRole::Psd { spec: si });
                for i in 0..size {
                    for j in i..size {
                        let scale = if i == j { 1.0 } else { SQRT2 };
                        trip.push((row, col, 1.0));
                        let beta = basis.monomial_at(i).add(basis.monomial_at(j));
                        for (idx, c) in shifted(&s.weight, &beta) {
                            trip.push((row, idx, -scale * c));
                        }
                        rhs.push(0.0);
                        row += 1;
                        col += 1;
                    }
                }
            }
            _ => zero_rows.extend(s.zero_rows()),
        }
    }
    // Distinct functionals only; T and Q can repeat ℓ(h x^γ) across equalities.
    let mut seen = std::collections::HashSet::new();
    for p in zero_rows {
        let key: Vec<(usize, u64)> = p.terms().map(|(a, c)| (a.graded_rank(), c.to_bits())).collect();
        if !seen.insert(key) {
            continue;
        }
        for (a, c) in p.terms() {
            trip.push((row, a.graded_rank(), c));
        }
        rhs.push(0.0);
        row += 1;
    }
    let mut c = vec![0.0; col];
    for (a, v) in f.terms() {
        c[a.graded_rank()] = v;
    }
    let a = SparseMatrix::from_triplets(row, col, &trip)?;
    let program = ConicProgram::new(blocks, c, a, rhs)?;
    Ok(Relaxation { kind, level: r, n, objective: f.clone(), specs, roles, program })
}

/// Appends v'Gv·g coefficient columns for a Gram block starting at `col`.
fn gram_columns(basis: &MonomialBasis, weight: &Polynomial, col: &mut usize, trip: &mut Vec<(usize, usize, f64)>) {
    let size = basis.len();
    for i in 0..size {
        for j in i..size {
            let scale = if i == j { 1.0 } else { SQRT2 };
            let beta = basis.monomial_at(i).add(basis.monomial_at(j));
            for (idx, c) in shifted(weight, &beta) {
                trip.push((idx, *col, scale * c));
            }
            *col += 1;
        }
    }
}

/// SOS side: max c such that f − c = Σ_J g_J σ_J + equality terms.
///
/// Stated as min −c. One row per monomial of degree ≤ 2r matches coefficients.
/// Equality multipliers are free polynomials of degree ≤ 2(r − ⌈h⌉) for T and
/// Q and free scalars on h² for R, which makes the program the exact conic
/// dual of the moment side.
pub fn build_sos_relaxation(
    f: &Polynomial,
    set: &SemiAlgebraicSet,
    cert: Certificate,
    r: usize,
    opts: &HierarchyOptions,
) -> Result<Relaxation, HierarchyError> {
    let kind = HierarchyKind { certificate: cert, side: Side::Sos };
    check(f, set, kind, r, opts)?;
    let n = set.n();
    let specs = preordering_products(set, r, cert);
    let rows = basis_size(n, 2 * r);
    let mut blocks = vec![Block::Free(1)];
    let mut roles = vec![BlockRole::Head];
    let mut trip: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0)];
    let mut col = 1;
    for (si, s) in specs.iter().enumerate() {
        match s.kind {
            ConstraintKind::Psd => {
                let basis = enumerate_monomials(n, s.matrix_order);
                blocks.push(Block::Psd(basis.len()));
                roles.push(BlockRole::Psd { spec: si });
                gram_columns(&basis, &s.weight, &mut col, &mut trip);
            }
            ConstraintKind::Zero | ConstraintKind::ScalarZero => {
                let mult = s.zero_rows();
                blocks.push(Block::Free(mult.len()));
                roles.push(BlockRole::Multiplier { spec: si });
                for p in mult {
                    for (a, c) in p.terms() {
                        trip.push((a.graded_rank(), col, c));
                    }
                    col += 1;
                }
            }
        }
    }
    let mut b = vec![0.0; rows];
    for (a, v) in f.terms() {
        b[a.graded_rank()] = v;
    }
    let mut c = vec![0.0; col];
    c[0] = -1.0;
    let a = SparseMatrix::from_triplets(rows, col, &trip)?;
    let program = ConicProgram::new(blocks, c, a, b)?;
    Ok(Relaxation { kind, level: r, n, objective: f.clone(), specs, roles, program })
}

/// Either side, by kind.
pub fn build_relaxation(
    f: &Polynomial,
    set: &SemiAlgebraicSet,
    kind: HierarchyKind,
    r: usize,
    opts: &HierarchyOptions,
) -> Result<Relaxation, HierarchyError> {
    match kind.side {
        Side::Moment => build_moment_relaxation(f, set, kind.certificate, r, opts),
        Side::Sos => build_sos_relaxation(f, set, kind.certificate, r, opts),
    }
}
