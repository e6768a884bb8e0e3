use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::MomentError;
use crate::polycore::{basis_size, enumerate_monomials, invert_checked, MultiIndex, Polynomial};

/// y = (y_α)_{|α| ≤ k} in the global graded order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSequence {
    n: usize,
    order: usize,
    values: Vec<f64>,
}

impl TruncatedSequence {
    pub fn new(n: usize, order: usize, values: Vec<f64>) -> Result<Self, MomentError> {
        if n == 0 {
            return Err(MomentError::Invalid("dimension must be positive".into()));
        }
        let len = basis_size(n, order);
        if values.len() != len {
            return Err(MomentError::Dimension { expected: len, found: values.len() });
        }
        Ok(TruncatedSequence { n, order, values })
    }

    /// Entry y_α from a closure over the basis.
    pub fn from_fn(n: usize, order: usize, f: impl FnMut(&MultiIndex) -> f64) -> Self {
        let values = enumerate_monomials(n, order).iter().map(f).collect();
        TruncatedSequence { n, order, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// y₀
    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    /// y_α, or `None` past the truncation.
    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        (alpha.len() == self.n && alpha.degree() as usize <= self.order).then(|| self.values[alpha.graded_rank()])
    }

    /// ℓ_y(f) = Σ f_α y_α
    pub fn riesz_apply(&self, f: &Polynomial) -> Result<f64, MomentError> {
        if f.n() != self.n {
            return Err(MomentError::Dimension { expected: self.n, found: f.n() });
        }
        if f.degree() > self.order {
            return Err(MomentError::DegreeOverflow { degree: f.degree(), order: self.order });
        }
        Ok(f.terms().map(|(a, c)| c * self.values[a.graded_rank()]).sum())
    }

    /// M_r(y)(α, β) = y_{α+β}
    pub fn moment_matrix(&self, r: usize) -> Result<DMatrix<f64>, MomentError> {
        self.localizing_matrix(&Polynomial::constant(self.n, 1.0), r)
    }

    /// M_{r−⌈g⌉}(g y)(α, β) = Σ_γ g_γ y_{γ+α+β}
    pub fn localizing_matrix(&self, g: &Polynomial, r: usize) -> Result<DMatrix<f64>, MomentError> {
        if g.n() != self.n {
            return Err(MomentError::Dimension { expected: self.n, found: g.n() });
        }
        if 2 * r > self.order {
            return Err(MomentError::DegreeOverflow { degree: 2 * r, order: self.order });
        }
        let half = g.half_degree();
        if half > r {
            return Err(MomentError::LevelTooLow { level: r, needed: half });
        }
        let basis = enumerate_monomials(self.n, r - half);
        let s = basis.len();
        let terms: Vec<(&MultiIndex, f64)> = g.terms().collect();
        let mut m = DMatrix::zeros(s, s);
        for i in 0..s {
            for j in i..s {
                let ab = basis.monomial_at(i).add(basis.monomial_at(j));
                let v: f64 = terms.iter().map(|(gam, c)| c * self.values[ab.add(gam).graded_rank()]).sum();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    /// π_k: first s(n, k) coordinates.
    pub fn project_order(&self, k: usize) -> Result<TruncatedSequence, MomentError> {
        if k > self.order {
            return Err(MomentError::DegreeOverflow { degree: k, order: self.order });
        }
        Ok(TruncatedSequence { n: self.n, order: k, values: self.values[..basis_size(self.n, k)].to_vec() })
    }

    /// ψ: keeps the coordinates y_{(α, 0)} of the first `keep` variables.
    pub fn project_dimension(&self, keep: usize) -> Result<TruncatedSequence, MomentError> {
        if keep == 0 || keep > self.n {
            return Err(MomentError::Dimension { expected: self.n, found: keep });
        }
        let tail = vec![0; self.n - keep];
        Ok(TruncatedSequence::from_fn(keep, self.order, |a| {
            let full = MultiIndex::new(a.exps().to_vec()).concat(&MultiIndex::new(tail.clone()));
            self.values[full.graded_rank()]
        }))
    }

    /// Pushforward under x ↦ Ax: ȳ_α = ℓ_y((Ax)^α).
    pub fn transform(&self, a: &DMatrix<f64>) -> Result<TruncatedSequence, MomentError> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(MomentError::Dimension { expected: self.n, found: a.nrows() });
        }
        invert_checked(a).map_err(|_| MomentError::Singular)?;
        let n = self.n;
        let rows: Vec<Polynomial> = (0..n)
            .map(|i| {
                let mut p = Polynomial::zero(n);
                for j in 0..n {
                    p.add_term(MultiIndex::unit(n, j), a[(i, j)]);
                }
                p
            })
            .collect();
        // powers[i][e] = (Ax)_i^e
        let powers: Vec<Vec<Polynomial>> = rows
            .iter()
            .map(|q| {
                let mut v = vec![Polynomial::constant(n, 1.0)];
                for e in 1..=self.order {
                    let next = &v[e - 1] * q;
                    v.push(next);
                }
                v
            })
            .collect();
        let basis = enumerate_monomials(n, self.order);
        let mut values = Vec::with_capacity(basis.len());
        for alpha in basis.iter() {
            let mut p = Polynomial::constant(n, 1.0);
            for (i, &e) in alpha.exps().iter().enumerate() {
                if e > 0 {
                    p = &p * &powers[i][e as usize];
                }
            }
            values.push(self.riesz_apply(&p)?);
        }
        Ok(TruncatedSequence { n, order: self.order, values })
    }

    /// Column names for CSV export ("1", "x1", "x1^2*x2", ...).
    pub fn column_names(&self) -> Vec<String> {
        enumerate_monomials(self.n, self.order).iter().map(|m| m.to_string()).collect()
    }
}

/// Σ_j w_j δ_{x_j} with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, MomentError> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(MomentError::Invalid(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        let n = atoms[0].len();
        if n == 0 || atoms.iter().any(|a| a.len() != n) {
            return Err(MomentError::Invalid("atoms must share a positive dimension".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(MomentError::Invalid("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MomentError::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    pub fn dirac(x: Vec<f64>) -> Result<Self, MomentError> {
        Self::new(vec![x], vec![1.0])
    }

    /// Equal weights on the given atoms.
    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self, MomentError> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let weights = vec![w; atoms.len()];
        // Rounding in 1/N can drift past 1e-12 only for huge N.
        Self::new(atoms, weights)
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.atoms[0].len()
    }
}

/// y_α = Σ_j w_j x_j^α
pub fn sequence_from_measure(mu: &DiscreteMeasure, k: usize) -> TruncatedSequence {
    let basis = enumerate_monomials(mu.n(), k);
    let mut values = vec![0.0; basis.len()];
    for (x, w) in mu.atoms.iter().zip(&mu.weights) {
        for (v, m) in values.iter_mut().zip(basis.iter()) {
            *v += w * m.eval(x);
        }
    }
    TruncatedSequence { n: mu.n(), order: k, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seq1(v: &[f64]) -> TruncatedSequence {
        TruncatedSequence::new(1, v.len() - 1, v.to_vec()).unwrap()
    }

    fn poly1(c: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(1, c.iter().map(|(e, v)| (vec![*e], *v))).unwrap()
    }

    #[test]
    fn riesz_examples() {
        assert_eq!(seq1(&[1.0, 2.0, 4.0]).riesz_apply(&poly1(&[(2, 1.0), (1, -3.0)])).unwrap(), -2.0);
        assert_eq!(seq1(&[1.0, 0.3, 0.2]).riesz_apply(&Polynomial::constant(1, 1.0)).unwrap(), 1.0);
        assert_eq!(seq1(&[1.0, 0.0, 1.0]).riesz_apply(&poly1(&[(1, 1.0)])).unwrap(), 0.0);
        assert!(matches!(
            seq1(&[1.0, 0.0, 1.0]).riesz_apply(&poly1(&[(3, 1.0)])),
            Err(MomentError::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn moment_matrix_examples() {
        let m = seq1(&[1.0, 0.0, 1.0]).moment_matrix(1).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2));
        let dirac0 = sequence_from_measure(&DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap(), 4);
        let m0 = dirac0.moment_matrix(2).unwrap();
        assert_eq!(m0[(0, 0)], 1.0);
        assert_eq!(m0.iter().filter(|v| **v != 0.0).count(), 1);
        let half = seq1(&[1.0, 0.5, 0.25, 0.125, 0.0625]);
        let v = DMatrix::from_column_slice(3, 1, &[1.0, 0.5, 0.25]);
        assert_eq!(half.moment_matrix(2).unwrap(), &v * v.transpose());
        assert!(seq1(&[1.0, 0.0, 1.0]).moment_matrix(2).is_err());
    }

    #[test]
    fn localizing_examples() {
        let y = seq1(&[1.0, 0.0, 1.0]);
        let g = poly1(&[(0, 1.0), (2, -1.0)]);
        assert_eq!(y.localizing_matrix(&g, 1).unwrap(), DMatrix::from_element(1, 1, 0.0));
        let half = seq1(&[1.0, 0.5, 0.25]);
        let v = DMatrix::from_column_slice(2, 1, &[1.0, 0.5]);
        let half4 = seq1(&[1.0, 0.5, 0.25, 0.125, 0.0625]);
        let lx = half4.localizing_matrix(&poly1(&[(1, 1.0)]), 2).unwrap();
        assert_eq!(lx, (&v * v.transpose()) * 0.5);
        assert_eq!(half.localizing_matrix(&Polynomial::constant(1, 1.0), 1).unwrap(), half.moment_matrix(1).unwrap());
    }

    #[test]
    fn measure_examples() {
        let d0 = sequence_from_measure(&DiscreteMeasure::dirac(vec![0.0]).unwrap(), 4);
        assert_eq!(d0.values(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        let pm = DiscreteMeasure::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(sequence_from_measure(&pm, 2).values(), &[1.0, 0.0, 1.0]);
        let three = DiscreteMeasure::uniform(vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let y = sequence_from_measure(&three, 2);
        assert_relative_eq!(y.values()[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(y.values()[2], 5.0 / 12.0, epsilon = 1e-15);
        assert!(DiscreteMeasure::new(vec![vec![0.0]], vec![0.5]).is_err());
    }

    #[test]
    fn projections() {
        let y = seq1(&[1.0, 2.0, 4.0]);
        assert_eq!(y.project_order(0).unwrap().values(), &[1.0]);
        assert_eq!(y.project_order(2).unwrap(), y);
        assert!(y.project_order(3).is_err());
        let h = seq1(&[1.0, 0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(h.project_order(2).unwrap().values(), &[1.0, 0.5, 0.25]);
        let ab = sequence_from_measure(&DiscreteMeasure::dirac(vec![0.3, -2.0]).unwrap(), 3);
        let a = sequence_from_measure(&DiscreteMeasure::dirac(vec![0.3]).unwrap(), 3);
        let p = ab.project_dimension(1).unwrap();
        for (u, v) in p.values().iter().zip(a.values()) {
            assert_relative_eq!(u, v, epsilon = 1e-15);
        }
    }

    #[test]
    fn transform_examples() {
        let y = seq1(&[1.0, 1.0, 1.0]);
        let t = y.transform(&DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(t.values(), &[1.0, 2.0, 4.0]);
        assert_eq!(y.transform(&DMatrix::identity(1, 1)).unwrap(), y);
        assert!(matches!(y.transform(&DMatrix::zeros(1, 1)), Err(MomentError::Singular)));
        // e_α ↦ R^{|α|} e_α
        let n = 2;
        let len = basis_size(n, 4);
        let basis = enumerate_monomials(n, 4);
        for i in 0..len {
            let mut v = vec![0.0; len];
            v[i] = 1.0;
            let e = TruncatedSequence::new(n, 4, v).unwrap();
            let img = e.transform(&(DMatrix::identity(2, 2) * 3.0)).unwrap();
            let want = 3f64.powi(basis.monomial_at(i).degree() as i32);
            for (j, val) in img.values().iter().enumerate() {
                assert_eq!(*val, if i == j { want } else { 0.0 });
            }
        }
    }
}
