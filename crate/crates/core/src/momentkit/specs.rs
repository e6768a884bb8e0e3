use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MomentError, TruncatedSequence};
use crate::polycore::{enumerate_monomials, Polynomial};
use crate::semialg::SemiAlgebraicSet;

/// Which certificate cone a relaxation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Certificate {
    /// Preordering: all products g_J.
    T,
    /// Quadratic module: single g_j.
    Q,
    /// Preordering with scalar equality terms h_i².
    R,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Certificate::T => "T",
            Certificate::Q => "Q",
            Certificate::R => "R",
        })
    }
}

impl FromStr for Certificate {
    type Err = MomentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" | "t" => Ok(Certificate::T),
            "Q" | "q" => Ok(Certificate::Q),
            "R" | "r" => Ok(Certificate::R),
            other => Err(MomentError::Invalid(format!("unknown certificate '{other}' (expected T, Q or R)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// M_{order}(w y) ⪰ 0
    Psd,
    /// M_{order}(h y) = 0, imposed entrywise as ℓ(h x^γ) = 0 for |γ| ≤ 2·order.
    Zero,
    /// ℓ_y(w) = 0 for a single weight (w = h²).
    ScalarZero,
}

/// One localizing constraint of a relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizingSpec {
    pub weight: Polynomial,
    pub matrix_order: usize,
    pub kind: ConstraintKind,
    /// Inequality indices J for products, or the equality index.
    pub generators: Vec<usize>,
}

impl LocalizingSpec {
    /// Scalar functionals imposed by zero-type specs.
    pub fn zero_rows(&self) -> Vec<Polynomial> {
        match self.kind {
            ConstraintKind::Psd => Vec::new(),
            ConstraintKind::ScalarZero => vec![self.weight.clone()],
            ConstraintKind::Zero => enumerate_monomials(self.weight.n(), 2 * self.matrix_order)
                .iter()
                .map(|g| &self.weight * &Polynomial::monomial(g.clone(), 1.0))
                .collect(),
        }
    }
}

/// Subsets J ⊆ [m] ordered by size then lexicographically.
fn subsets_by_size(m: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_size.min(m) {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |l| l + 1);
            for j in start..m {
                let mut t = s.clone();
                t.push(j);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Localizing constraints of the level-r relaxation for the given certificate.
///
/// T and R use every product g_J with ⌈g_J⌉ ≤ r, Q only J = ∅ and singletons.
/// Equalities become zero localizing matrices for T and Q and the scalar
/// ℓ(h²) = 0 for R; terms that do not fit in degree 2r are dropped.
pub fn preordering_products(set: &SemiAlgebraicSet, r: usize, cert: Certificate) -> Vec<LocalizingSpec> {
    let n = set.n();
    let g = set.inequalities();
    let degs: Vec<usize> = g.iter().map(Polynomial::degree).collect();
    let max_size = match cert {
        Certificate::Q => 1,
        _ => g.len(),
    };
    let mut specs = Vec::new();
    for j in subsets_by_size(g.len(), max_size) {
        let deg: usize = j.iter().map(|&i| degs[i]).sum();
        let half = deg.div_ceil(2);
        if half > r {
            continue;
        }
        let weight = j.iter().fold(Polynomial::constant(n, 1.0), |acc, &i| &acc * &g[i]);
        specs.push(LocalizingSpec { weight, matrix_order: r - half, kind: ConstraintKind::Psd, generators: j });
    }
    for (i, h) in set.equalities().iter().enumerate() {
        match cert {
            Certificate::T | Certificate::Q => {
                let half = h.half_degree();
                if half <= r {
                    specs.push(LocalizingSpec {
                        weight: h.clone(),
                        matrix_order: r - half,
                        kind: ConstraintKind::Zero,
                        generators: vec![i],
                    });
                }
            }
            Certificate::R => {
                if h.degree() <= r {
                    specs.push(LocalizingSpec {
                        weight: h * h,
                        matrix_order: 0,
                        kind: ConstraintKind::ScalarZero,
                        generators: vec![i],
                    });
                }
            }
        }
    }
    specs
}

/// Largest violation of the specs at y: negative eigenvalues and nonzero rows.
pub fn membership_violation(y: &TruncatedSequence, specs: &[LocalizingSpec]) -> Result<f64, MomentError> {
    let mut worst = 0.0_f64;
    for s in specs {
        match s.kind {
            ConstraintKind::Psd => {
                let r = s.matrix_order + s.weight.half_degree();
                let m = y.localizing_matrix(&s.weight, r)?;
                let lo = sdpcore::min_eigenvalue(&m);
                worst = worst.max(-lo);
            }
            _ => {
                for row in s.zero_rows() {
                    worst = worst.max(y.riesz_apply(&row)?.abs());
                }
            }
        }
    }
    Ok(worst)
}
