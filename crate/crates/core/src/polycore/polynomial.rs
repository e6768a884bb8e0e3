use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{MultiIndex, PolyError};

/// Sparse real polynomial in n variables.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

/// Which map [`Polynomial::compose_linear`] substitutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearDirection {
    /// f(Ax)
    Forward,
    /// f(A⁻¹x)
    Inverse,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(MultiIndex::zeros(n), c)
    }

    /// x_i (zero based).
    pub fn var(n: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(n, i), 1.0)
    }

    pub fn monomial(alpha: MultiIndex, c: f64) -> Self {
        let n = alpha.len();
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(alpha, c);
        }
        Polynomial { n, terms }
    }

    /// Builds from (exponent vector, coefficient) pairs, summing repeats.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Polynomial::zero(n);
        for (k, (exps, c)) in terms.into_iter().enumerate() {
            if exps.len() != n {
                return Err(PolyError::TermDimension { term: k, expected: n, found: exps.len() });
            }
            if !c.is_finite() {
                return Err(PolyError::NonFinite(k));
            }
            p.add_term(MultiIndex::new(exps), c);
        }
        Ok(p)
    }

    /// R² − ‖x‖²
    pub fn ball(n: usize, radius: f64) -> Self {
        let mut p = Polynomial::constant(n, radius * radius);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(MultiIndex::new(e), -1.0);
        }
        p
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        debug_assert_eq!(alpha.len(), self.n);
        if c == 0.0 {
            return;
        }
        match self.terms.entry(alpha) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|a| a.degree() as usize).max().unwrap_or(0)
    }

    /// ⌈deg f / 2⌉
    pub fn half_degree(&self) -> usize {
        self.degree().div_ceil(2)
    }

    /// Σ |f_α|
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|v| v.abs()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.n {
            return Err(PolyError::Dimension { expected: self.n, found: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the length check; `x` must have n entries.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, c)| c * a.eval(x)).sum()
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero(self.n);
        }
        Polynomial { n: self.n, terms: self.terms.iter().map(|(k, v)| (k.clone(), v * s)).collect() }
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.n, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// ∂f/∂x_i
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (a, c) in &self.terms {
            let e = a.exps()[i];
            if e > 0 {
                let mut v = a.exps().to_vec();
                v[i] -= 1;
                out.add_term(MultiIndex::new(v), c * e as f64);
            }
        }
        out
    }

    /// Drops coefficients with magnitude ≤ tol.
    pub fn prune(&self, tol: f64) -> Polynomial {
        Polynomial { n: self.n, terms: self.terms.iter().filter(|(_, v)| v.abs() > tol).map(|(k, v)| (k.clone(), *v)).collect() }
    }

    /// f(q₁(x), …, q_n(x)) where the images live in a common ring.
    pub fn substitute(&self, images: &[Polynomial]) -> Result<Polynomial, PolyError> {
        if images.len() != self.n {
            return Err(PolyError::Dimension { expected: self.n, found: images.len() });
        }
        let target = images.first().map(|p| p.n).unwrap_or(0);
        if images.iter().any(|p| p.n != target) {
            return Err(PolyError::Mixed);
        }
        let maxdeg: Vec<u32> = (0..self.n).map(|i| self.terms.keys().map(|a| a.exps()[i]).max().unwrap_or(0)).collect();
        let powers: Vec<Vec<Polynomial>> = images
            .iter()
            .zip(&maxdeg)
            .map(|(q, &d)| {
                let mut v = vec![Polynomial::constant(target, 1.0)];
                for k in 1..=d as usize {
                    let next = &v[k - 1] * q;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(target);
        for (a, c) in &self.terms {
            let mut term = Polynomial::constant(target, *c);
            for (i, &e) in a.exps().iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Exact expansion of f(Ax) or f(A⁻¹x).
    pub fn compose_linear(&self, a: &DMatrix<f64>, dir: LinearDirection) -> Result<Polynomial, PolyError> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(PolyError::Dimension { expected: self.n, found: a.nrows() });
        }
        let m = match dir {
            LinearDirection::Forward => a.clone(),
            LinearDirection::Inverse => invert_checked(a)?,
        };
        let images: Vec<Polynomial> = (0..self.n)
            .map(|i| {
                let mut p = Polynomial::zero(self.n);
                for j in 0..self.n {
                    p.add_term(MultiIndex::unit(self.n, j), m[(i, j)]);
                }
                p
            })
            .collect();
        self.substitute(&images)
    }

    /// Places f into ℝ[x₁..x_total] reading its variables from `offset..offset+n`.
    pub fn embed(&self, total: usize, offset: usize) -> Polynomial {
        let mut out = Polynomial::zero(total);
        for (a, c) in &self.terms {
            let mut v = vec![0; total];
            v[offset..offset + self.n].copy_from_slice(a.exps());
            out.add_term(MultiIndex::new(v), *c);
        }
        out
    }

    /// Coefficient pairs in the problem-file layout.
    pub fn to_pairs(&self) -> Vec<(Vec<u32>, f64)> {
        self.terms.iter().map(|(k, v)| (k.exps().to_vec(), *v)).collect()
    }
}

/// Inverse with a singular-value conditioning check.
pub fn invert_checked(a: &DMatrix<f64>) -> Result<DMatrix<f64>, PolyError> {
    let sv = a.clone().svd(false, false).singular_values;
    let hi = sv.max();
    let lo = sv.min();
    if !(hi > 0.0) || lo <= 1e-13 * hi {
        return Err(PolyError::Singular);
    }
    a.clone().lu().try_inverse().ok_or(PolyError::Singular)
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "adding polynomials in different rings");
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(k.clone(), *v);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "multiplying polynomials in different rings");
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                *acc.entry(a.add(b)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, v| *v != 0.0);
        Polynomial { n: self.n, terms: acc }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if i == 0 {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if a.is_zero() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{a}")?;
            } else {
                write!(f, "{mag}*{a}")?;
            }
        }
        Ok(())
    }
}

/// Serialized as `[[exponents], coefficient]` pairs.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(transparent)]
pub struct PolynomialTerms(pub Vec<(Vec<u32>, f64)>);

impl PolynomialTerms {
    pub fn into_polynomial(self, n: usize) -> Result<Polynomial, PolyError> {
        Polynomial::from_terms(n, self.0)
    }
}

impl From<&Polynomial> for PolynomialTerms {
    fn from(p: &Polynomial) -> Self {
        PolynomialTerms(p.to_pairs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(terms: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(1, terms.iter().map(|&(e, c)| (vec![e], c))).unwrap()
    }

    fn p2(terms: &[([u32; 2], f64)]) -> Polynomial {
        Polynomial::from_terms(2, terms.iter().map(|&(e, c)| (e.to_vec(), c))).unwrap()
    }

    #[test]
    fn l1_norm_examples() {
        assert_eq!(p1(&[(2, 1.0), (1, -3.0)]).l1_norm(), 4.0);
        assert_eq!(Polynomial::zero(1).l1_norm(), 0.0);
        assert_eq!(p2(&[([1, 1], 2.0), ([1, 0], -1.0), ([0, 0], 0.5)]).l1_norm(), 3.5);
    }

    #[test]
    fn half_degree_examples() {
        assert_eq!(p1(&[(3, 1.0)]).half_degree(), 2);
        assert_eq!(p1(&[(4, 1.0)]).half_degree(), 2);
        assert_eq!(p1(&[(0, 7.0)]).half_degree(), 0);
        assert_eq!(Polynomial::zero(2).degree(), 0);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p1(&[(2, 1.0), (1, -3.0)]).eval(&[2.0]).unwrap(), -2.0);
        assert_eq!(Polynomial::constant(3, 1.0).eval(&[0.3, -2.0, 5.0]).unwrap(), 1.0);
        assert_eq!(p2(&[([1, 2], 1.0)]).eval(&[2.0, 3.0]).unwrap(), 18.0);
        assert!(matches!(p2(&[([1, 2], 1.0)]).eval(&[2.0]), Err(PolyError::Dimension { .. })));
    }

    #[test]
    fn compose_examples() {
        let x = p1(&[(1, 1.0)]);
        let two = DMatrix::from_row_slice(1, 1, &[2.0]);
        assert_eq!(x.compose_linear(&two, LinearDirection::Forward).unwrap(), p1(&[(1, 2.0)]));
        assert_eq!(x.compose_linear(&two, LinearDirection::Inverse).unwrap(), p1(&[(1, 0.5)]));
        let sq = p1(&[(2, 1.0)]);
        let id = DMatrix::identity(1, 1);
        assert_eq!(sq.compose_linear(&id, LinearDirection::Forward).unwrap(), sq);
        let s = p2(&[([1, 0], 1.0), ([0, 1], 1.0)]);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(s.compose_linear(&swap, LinearDirection::Forward).unwrap(), s);
    }

    #[test]
    fn singular_inverse_rejected() {
        let s = p2(&[([1, 0], 1.0)]);
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(s.compose_linear(&sing, LinearDirection::Inverse), Err(PolyError::Singular)));
        assert!(s.compose_linear(&sing, LinearDirection::Forward).is_ok());
    }

    #[test]
    fn no_stored_zeros() {
        let a = p1(&[(1, 1.0)]);
        let d = &a - &a;
        assert!(d.is_zero());
        assert_eq!(d.num_terms(), 0);
    }

    #[test]
    fn rejects_wrong_exponent_length() {
        let err = Polynomial::from_terms(2, vec![(vec![1, 0, 0], 1.0)]).unwrap_err();
        assert!(err.to_string().contains("expected 2"), "{err}");
    }

    #[test]
    fn derivative_and_display() {
        let f = p2(&[([2, 1], 3.0), ([0, 1], -1.0), ([0, 0], 0.5)]);
        assert_eq!(f.derivative(0), p2(&[([1, 1], 6.0)]));
        assert_eq!(f.to_string(), "0.5 - x2 + 3*x1^2*x2");
    }

    #[test]
    fn serde_pairs() {
        let f = p2(&[([2, 0], 1.0)]);
        let s = serde_json::to_string(&PolynomialTerms::from(&f)).unwrap();
        assert_eq!(s, "[[[2,0],1.0]]");
        let back: PolynomialTerms = serde_json::from_str(&s).unwrap();
        assert_eq!(back.into_polynomial(2).unwrap(), f);
    }
}
