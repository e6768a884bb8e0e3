use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::set::{HintSource, LojasiewiczHint, SemiAlgebraicSet, SetFamily};
use super::SetError;
use crate::polycore::{MultiIndex, Polynomial};
use sdpcore::{Block, ConicProgram, SolverOptions, SparseMatrix, Status};

/// Simple sets carrying a classical reference measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimpleKind {
    Ball,
    Simplex,
    Hypercube,
}

/// One factor X_i of a product: ball B_R, simplex Δ_K or cube [−R, R]^{n_i}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleFactor {
    pub kind: SimpleKind,
    pub n: usize,
    pub scale: f64,
}

impl SimpleFactor {
    pub fn new(kind: SimpleKind, n: usize, scale: f64) -> Result<Self, SetError> {
        if n == 0 {
            return Err(SetError::Invalid("factor dimension must be positive".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(SetError::Invalid(format!("factor scale {scale} must be positive")));
        }
        Ok(SimpleFactor { kind, n, scale })
    }

    /// Defining inequalities in the factor's own variables.
    pub fn inequalities(&self) -> Vec<Polynomial> {
        let n = self.n;
        match self.kind {
            SimpleKind::Ball => vec![Polynomial::ball(n, self.scale)],
            SimpleKind::Simplex => {
                let mut out: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
                let mut last = Polynomial::constant(n, self.scale);
                for i in 0..n {
                    last.add_term(MultiIndex::unit(n, i), -1.0);
                }
                out.push(last);
                out
            }
            SimpleKind::Hypercube => (0..n)
                .map(|i| {
                    let mut e = vec![0; n];
                    e[i] = 2;
                    let mut p = Polynomial::constant(n, self.scale * self.scale);
                    p.add_term(MultiIndex::new(e), -1.0);
                    p
                })
                .collect(),
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self.kind {
            SimpleKind::Simplex => vec![(0.0, self.scale); self.n],
            _ => vec![(-self.scale, self.scale); self.n],
        }
    }

    /// Radius of the smallest origin-centred ball containing the factor.
    pub fn enclosing_radius(&self) -> f64 {
        match self.kind {
            SimpleKind::Ball | SimpleKind::Simplex => self.scale,
            SimpleKind::Hypercube => self.scale * (self.n as f64).sqrt(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.inequalities().iter().all(|g| g.eval_unchecked(x) >= -tol)
    }
}

/// X = X₁ × … × X_m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleSetProduct {
    factors: Vec<SimpleFactor>,
}

impl SimpleSetProduct {
    pub fn new(factors: Vec<SimpleFactor>) -> Result<Self, SetError> {
        if factors.is_empty() {
            return Err(SetError::Invalid("a product needs at least one factor".into()));
        }
        for f in &factors {
            SimpleFactor::new(f.kind, f.n, f.scale)?;
        }
        Ok(SimpleSetProduct { factors })
    }

    pub fn single(kind: SimpleKind, n: usize, scale: f64) -> Result<Self, SetError> {
        Self::new(vec![SimpleFactor::new(kind, n, scale)?])
    }

    pub fn factors(&self) -> &[SimpleFactor] {
        &self.factors
    }

    /// n = Σ n_i
    pub fn n(&self) -> usize {
        self.factors.iter().map(|f| f.n).sum()
    }

    /// First coordinate of each factor.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.factors
            .iter()
            .map(|f| {
                let o = acc;
                acc += f.n;
                o
            })
            .collect()
    }

    /// Splits a point into per-factor blocks.
    pub fn split<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        self.offsets().into_iter().zip(&self.factors).map(|(o, f)| &x[o..o + f.n]).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n() && self.split(x).iter().zip(&self.factors).all(|(xi, f)| f.contains(xi, tol))
    }

    pub fn to_set(&self) -> Result<SemiAlgebraicSet, SetError> {
        let n = self.n();
        let mut ineq = Vec::new();
        let mut bounds = Vec::new();
        for (f, o) in self.factors.iter().zip(self.offsets()) {
            ineq.extend(f.inequalities().iter().map(|g| g.embed(n, o)));
            bounds.extend(f.bounds());
        }
        let family = match (self.factors.len(), self.factors[0].kind) {
            (1, SimpleKind::Ball) => SetFamily::Ball,
            (1, SimpleKind::Simplex) => SetFamily::Simplex,
            (1, SimpleKind::Hypercube) => SetFamily::Hypercube,
            _ => SetFamily::Product,
        };
        let mut set = SemiAlgebraicSet::new(n, ineq, vec![])?.with_family(family).with_bounds(bounds)?;
        if self.factors.len() == 1 && self.factors[0].kind == SimpleKind::Ball {
            set.set_radius_unchecked(self.factors[0].scale);
        }
        Ok(set)
    }

    /// Radius R with X ⊆ B_R.
    pub fn enclosing_radius(&self) -> f64 {
        self.factors.iter().map(|f| f.enclosing_radius().powi(2)).sum::<f64>().sqrt()
    }
}

/// Test domains.
#[derive(Debug, Clone, PartialEq)]
pub enum Catalog {
    Ball { n: usize, radius: f64 },
    Simplex { n: usize, size: f64 },
    Hypercube { n: usize, half_width: f64 },
    Sphere { n: usize, radius: f64 },
    /// {x : Ax ≤ b}
    Polytope { a: Vec<Vec<f64>>, b: Vec<f64> },
    BoxProduct(SimpleSetProduct),
    Custom { n: usize, inequalities: Vec<Polynomial>, equalities: Vec<Polynomial> },
}

fn hint(exponent: f64, source: HintSource) -> Option<LojasiewiczHint> {
    Some(LojasiewiczHint { exponent, constant: None, source })
}

/// Canonical constraint lists for the catalog entries.
pub fn make_catalog_set(kind: &Catalog) -> Result<SemiAlgebraicSet, SetError> {
    match kind {
        Catalog::Ball { n, radius } => Ok(SimpleSetProduct::single(SimpleKind::Ball, *n, *radius)?
            .to_set()?
            .with_lojasiewicz(hint(0.5, HintSource::StronglyConvex))),
        Catalog::Simplex { n, size } => Ok(SimpleSetProduct::single(SimpleKind::Simplex, *n, *size)?
            .to_set()?
            .with_lojasiewicz(hint(1.0, HintSource::Polytope))),
        Catalog::Hypercube { n, half_width } => Ok(SimpleSetProduct::single(SimpleKind::Hypercube, *n, *half_width)?
            .to_set()?
            .with_lojasiewicz(hint(1.0, HintSource::Cqc))),
        Catalog::BoxProduct(p) => p.to_set(),
        Catalog::Sphere { n, radius } => {
            if *n == 0 || !(*radius > 0.0) {
                return Err(SetError::Invalid("sphere needs n ≥ 1 and R > 0".into()));
            }
            let h = Polynomial::ball(*n, *radius);
            let set = SemiAlgebraicSet::new(*n, vec![], vec![h])?
                .archimedean_augment(*radius)?
                .with_family(SetFamily::Sphere)
                .with_lojasiewicz(hint(1.0, HintSource::Sphere));
            Ok(set)
        }
        Catalog::Polytope { a, b } => make_polytope(a, b),
        Catalog::Custom { n, inequalities, equalities } => {
            SemiAlgebraicSet::new(*n, inequalities.clone(), equalities.clone())
        }
    }
}

fn make_polytope(a: &[Vec<f64>], b: &[f64]) -> Result<SemiAlgebraicSet, SetError> {
    if a.is_empty() || a.len() != b.len() {
        return Err(SetError::Invalid(format!("polytope needs matching A ({} rows) and b ({} entries)", a.len(), b.len())));
    }
    let n = a[0].len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(SetError::Invalid("polytope rows must share a positive length".into()));
    }
    if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
        return Err(SetError::Invalid("polytope data must be finite".into()));
    }
    let ineq: Vec<Polynomial> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut p = Polynomial::constant(n, *bi);
            for (j, aij) in row.iter().enumerate() {
                p.add_term(MultiIndex::unit(n, j), -aij);
            }
            p
        })
        .collect();
    let mut set = SemiAlgebraicSet::new(n, ineq, vec![])?
        .with_family(SetFamily::Polytope)
        .with_lojasiewicz(hint(1.0, HintSource::Polytope));
    match polytope_extent(a, b) {
        PolytopeExtent::Empty => log::warn!("polytope {{Ax <= b}} appears to be empty (feasibility LP infeasible)"),
        PolytopeExtent::Unbounded => log::warn!("polytope {{Ax <= b}} is unbounded; no sampling box recorded"),
        PolytopeExtent::Box(bx) => set = set.with_bounds(bx)?,
    }
    Ok(set)
}

enum PolytopeExtent {
    Empty,
    Unbounded,
    Box(Vec<(f64, f64)>),
}

/// LP over {Ax + s = b, s ≥ 0}: `Some(value)` when solved, `None` when unbounded.
fn polytope_lp(a: &[Vec<f64>], b: &[f64], cost: &[f64]) -> Result<Option<f64>, ()> {
    let (m, n) = (a.len(), a[0].len());
    let mut trip = Vec::new();
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            trip.push((i, j, *v));
        }
        trip.push((i, n + i, 1.0));
    }
    let mat = SparseMatrix::from_triplets(m, n + m, &trip).map_err(|_| ())?;
    let mut c = cost.to_vec();
    c.resize(n + m, 0.0);
    let prog = ConicProgram::new(vec![Block::Free(n), Block::Nonneg(m)], c, mat, b.to_vec()).map_err(|_| ())?;
    let sol = sdpcore::solve(&prog, &SolverOptions::with_tol(1e-9)).map_err(|_| ())?;
    match (sol.status, &sol.certificate) {
        (Status::InfeasibleCertificate, Some(sdpcore::Infeasibility::Dual { .. })) => Ok(None),
        (Status::InfeasibleCertificate, _) => Err(()),
        _ => Ok(Some(sol.primal_value)),
    }
}

fn polytope_extent(a: &[Vec<f64>], b: &[f64]) -> PolytopeExtent {
    let n = a[0].len();
    if polytope_lp(a, b, &vec![0.0; n]).is_err() {
        return PolytopeExtent::Empty;
    }
    let mut bx = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let lo = polytope_lp(a, b, &e);
        e[j] = -1.0;
        let hi = polytope_lp(a, b, &e);
        match (lo, hi) {
            (Ok(Some(lo)), Ok(Some(hi))) => {
                let pad = 1e-6 * (1.0 + lo.abs().max(hi.abs()));
                bx.push((lo - pad, -hi + pad));
            }
            (Err(()), _) | (_, Err(())) => return PolytopeExtent::Empty,
            _ => return PolytopeExtent::Unbounded,
        }
    }
    PolytopeExtent::Box(bx)
}

/// Feasibility LP for {Ax ≤ b}.
pub fn polytope_is_empty(a: &[Vec<f64>], b: &[f64]) -> bool {
    matches!(polytope_extent(a, b), PolytopeExtent::Empty)
}

/// Square matrix helper for callers holding nalgebra data.
pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_entry() {
        let x = make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap();
        assert_eq!(x.inequalities(), &[Polynomial::from_terms(1, vec![(vec![0], 1.0), (vec![2], -1.0)]).unwrap()]);
        assert!(x.equalities().is_empty());
        assert_eq!(x.radius(), Some(1.0));
    }

    #[test]
    fn sphere_entry() {
        let x = make_catalog_set(&Catalog::Sphere { n: 2, radius: 1.0 }).unwrap();
        let h = Polynomial::from_terms(2, vec![(vec![0, 0], 1.0), (vec![2, 0], -1.0), (vec![0, 2], -1.0)]).unwrap();
        assert_eq!(x.equalities(), &[h.clone()]);
        // The redundant ball inequality rides along.
        assert_eq!(x.inequalities(), &[h]);
        assert_eq!(x.radius(), Some(1.0));
    }

    #[test]
    fn simplex_entry() {
        let x = make_catalog_set(&Catalog::Simplex { n: 2, size: 1.0 }).unwrap();
        let want = vec![
            Polynomial::var(2, 0),
            Polynomial::var(2, 1),
            Polynomial::from_terms(2, vec![(vec![0, 0], 1.0), (vec![1, 0], -1.0), (vec![0, 1], -1.0)]).unwrap(),
        ];
        assert_eq!(x.inequalities(), want.as_slice());
        assert_eq!(x.lojasiewicz().unwrap().exponent, 1.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(make_catalog_set(&Catalog::Ball { n: 2, radius: 0.0 }).is_err());
        assert!(make_catalog_set(&Catalog::Simplex { n: 2, size: -1.0 }).is_err());
        assert!(make_catalog_set(&Catalog::Polytope { a: vec![vec![1.0, 0.0]], b: vec![] }).is_err());
    }

    #[test]
    fn polytope_hint_and_box() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]];
        let b = vec![1.0, 1.0, 0.0];
        let x = make_catalog_set(&Catalog::Polytope { a, b }).unwrap();
        assert_eq!(x.lojasiewicz().unwrap().exponent, 1.0);
        let bx = x.bounding_box().unwrap();
        assert!((bx[0].0 + 1.0).abs() < 1e-4 && (bx[0].1 - 1.0).abs() < 1e-4, "{bx:?}");
    }

    #[test]
    fn empty_polytope_is_reported_not_rejected() {
        let a = vec![vec![1.0], vec![-1.0]];
        let b = vec![-1.0, -1.0];
        assert!(polytope_is_empty(&a, &b));
        assert!(make_catalog_set(&Catalog::Polytope { a, b }).is_ok());
        assert!(!polytope_is_empty(&[vec![1.0], vec![-1.0]], &[1.0, 1.0]));
    }

    #[test]
    fn product_dimension_and_split() {
        let p = SimpleSetProduct::new(vec![
            SimpleFactor::new(SimpleKind::Ball, 2, 1.0).unwrap(),
            SimpleFactor::new(SimpleKind::Simplex, 1, 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.offsets(), vec![0, 2]);
        let x = p.to_set().unwrap();
        assert_eq!(x.inequalities().len(), 3);
        assert!(p.contains(&[0.5, 0.5, 0.3], 0.0));
        assert!(!p.contains(&[0.5, 0.5, 1.3], 0.0));
    }
}
