use std::collections::{BTreeMap, HashMap};

use nalgebra::{Cholesky, DMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{pow, ToPrimitive, Zero};

use super::measure::{ProductMeasure, ReferenceMeasure};
use super::KernelError;
use crate::polycore::{basis_size, enumerate_monomials, MonomialBasis, MultiIndex, Polynomial};
use crate::semialg::SimpleSetProduct;

/// Smallest eigenvalue accepted for the equilibrated moment Gram matrix.
pub const GRAM_EIGEN_FLOOR: f64 = 1e-10;

/// Default degree cap: conditioning stays below ~1e10 up to here.
pub fn default_max_degree(n: usize) -> usize {
    if n == 1 {
        16
    } else {
        8
    }
}

/// Orthonormal polynomials P_α for one reference measure, graded-lex ordered.
///
/// Row i of `coeffs` holds P_i in the monomial basis; the matrix is lower
/// triangular so deg P_α = |α|.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    measure: ReferenceMeasure,
    monomials: MonomialBasis,
    coeffs: DMatrix<f64>,
}

/// Gram–Schmidt through a Cholesky factor of the equilibrated moment Gram matrix.
///
/// The Gram matrix is formed in standardized coordinates u = (x − mean) / std;
/// raw monomials on [0, 1] are Hilbert-like and lose definiteness early.
pub fn orthonormal_basis(measure: ReferenceMeasure, max_degree: usize) -> Result<KernelBasis, KernelError> {
    let n = measure.n();
    let monomials = enumerate_monomials(n, max_degree);
    let s = monomials.len();
    let scale = measure.factor.scale;
    let mut raw: HashMap<Vec<u32>, BigRational> = HashMap::new();
    let mut exact = |alpha: Vec<u32>| -> Result<BigRational, KernelError> {
        if let Some(m) = raw.get(&alpha) {
            return Ok(m.clone());
        }
        let m = measure.unit_moment_exact(&alpha)?;
        raw.insert(alpha, m.clone());
        Ok(m)
    };
    let unit = |i: usize, k: u32| {
        let mut e = vec![0; n];
        e[i] = k;
        e
    };
    let mut center = Vec::with_capacity(n);
    let mut spread = Vec::with_capacity(n);
    let mut images = Vec::with_capacity(n);
    for i in 0..n {
        let c = exact(unit(i, 1))?;
        let var = exact(unit(i, 2))? - &c * &c;
        let sd = var.to_f64().unwrap_or(0.0).max(0.0).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        let cf = c.to_f64().unwrap_or(0.0);
        images.push(&(&Polynomial::var(n, i) - &Polynomial::constant(n, scale * cf)) * &Polynomial::constant(n, 1.0 / (scale * sd)));
        center.push(c);
        spread.push(sd);
    }
    // E[u^γ] from the exact centered moment, divided by the spread in floating point.
    let mut standardized: HashMap<MultiIndex, f64> = HashMap::new();
    let mut gram = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..=i {
            let gamma = monomials.monomial_at(i).add(monomials.monomial_at(j));
            let m = match standardized.get(&gamma) {
                Some(&m) => m,
                None => {
                    let mut acc = BigRational::from_integer(BigInt::from(0));
                    for beta in sub_indices(gamma.exps()) {
                        let mut term = exact(beta.clone())?;
                        if term.is_zero() {
                            continue;
                        }
                        for (k, (&g, &b)) in gamma.exps().iter().zip(&beta).enumerate() {
                            let shift = -&center[k];
                            term *= BigRational::from_integer(binomial(g, b)) * pow(shift.clone(), (g - b) as usize);
                        }
                        acc += term;
                    }
                    let denom: f64 = gamma.exps().iter().zip(&spread).map(|(&g, sd)| sd.powi(g as i32)).product();
                    let m = acc.to_f64().unwrap_or(f64::NAN) / denom;
                    standardized.insert(gamma, m);
                    m
                }
            };
            gram[(i, j)] = m;
            gram[(j, i)] = m;
        }
    }
    let d: Vec<f64> = (0..s).map(|i| 1.0 / gram[(i, i)].sqrt()).collect();
    let eq = DMatrix::from_fn(s, s, |i, j| gram[(i, j)] * d[i] * d[j]);
    // Report the first degree whose leading block loses definiteness.
    for deg in 0..=max_degree {
        let k = basis_size(n, deg);
        let lo = sdpcore::min_eigenvalue(&eq.view((0, 0), (k, k)).into_owned());
        if lo <= GRAM_EIGEN_FLOOR {
            return Err(KernelError::IllConditioned { degree: deg, min_eigenvalue: lo });
        }
    }
    let l = Cholesky::new(eq).ok_or(KernelError::IllConditioned { degree: max_degree, min_eigenvalue: 0.0 })?.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(s, s))
        .ok_or(KernelError::IllConditioned { degree: max_degree, min_eigenvalue: 0.0 })?;
    let expand = |alpha: &MultiIndex| Polynomial::monomial(alpha.clone(), 1.0).substitute(&images).expect("arity matches");
    // Back to raw monomials; u^α has leading term ∝ x^α, so rows stay lower triangular.
    let mut coeffs = DMatrix::zeros(s, s);
    for k in 0..s {
        for (a, c) in expand(monomials.monomial_at(k)).terms() {
            let col = monomials.index_of(a).expect("degree preserved");
            for i in k..s {
                coeffs[(i, col)] += linv[(i, k)] * d[k] * c;
            }
        }
    }
    Ok(KernelBasis { measure, monomials, coeffs })
}

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::from(1), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// All β ≤ γ componentwise.
fn sub_indices(gamma: &[u32]) -> Vec<Vec<u32>> {
    gamma.iter().fold(vec![Vec::new()], |acc, &g| {
        acc.into_iter().flat_map(|b| (0..=g).map(move |k| [b.as_slice(), &[k]].concat())).collect()
    })
}

impl KernelBasis {
    pub fn measure(&self) -> &ReferenceMeasure {
        &self.measure
    }

    pub fn n(&self) -> usize {
        self.measure.n()
    }

    pub fn max_degree(&self) -> usize {
        self.monomials.order()
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Label α of the i-th basis element.
    pub fn label(&self, i: usize) -> &MultiIndex {
        self.monomials.monomial_at(i)
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.label(i).degree() as usize
    }

    /// Index range of the degree-j component.
    pub fn component_range(&self, j: usize) -> std::ops::Range<usize> {
        let lo = if j == 0 { 0 } else { basis_size(self.n(), j - 1) };
        lo..basis_size(self.n(), j)
    }

    pub fn polynomial(&self, i: usize) -> Polynomial {
        let mut p = Polynomial::zero(self.n());
        for k in 0..=i {
            let c = self.coeffs[(i, k)];
            if c != 0.0 {
                p.add_term(self.monomials.monomial_at(k).clone(), c);
            }
        }
        p
    }

    /// All P_i(x) with deg ≤ `degree`.
    pub fn eval(&self, x: &[f64], degree: usize) -> Vec<f64> {
        let k = basis_size(self.n(), degree);
        let v: Vec<f64> = self.monomials.iter().take(k).map(|a| a.eval(x)).collect();
        (0..k).map(|i| (0..=i).map(|j| self.coeffs[(i, j)] * v[j]).sum()).collect()
    }

    /// C^{(j)}(x, y) = Σ_{|α|=j} P_α(x) P_α(y)
    pub fn component_kernel(&self, j: usize, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        if j > self.max_degree() {
            return Err(KernelError::DegreeOverflow { degree: j, max: self.max_degree() });
        }
        let (px, py) = (self.eval(x, j), self.eval(y, j));
        Ok(self.component_range(j).map(|i| px[i] * py[i]).sum())
    }

    /// C^{(j)}(x, x) as a polynomial in x.
    pub fn diagonal_kernel(&self, j: usize) -> Result<Polynomial, KernelError> {
        if j > self.max_degree() {
            return Err(KernelError::DegreeOverflow { degree: j, max: self.max_degree() });
        }
        Ok(self
            .component_range(j)
            .map(|i| {
                let p = self.polynomial(i);
                &p * &p
            })
            .fold(Polynomial::zero(self.n()), |acc, q| &acc + &q))
    }

    /// ⟨x^b, P_i⟩_μ for every i with deg P_i ≤ |b|.
    pub fn project_monomial(&self, b: &[u32]) -> Result<Vec<f64>, KernelError> {
        let deg = b.iter().sum::<u32>() as usize;
        if deg > self.max_degree() {
            return Err(KernelError::DegreeOverflow { degree: deg, max: self.max_degree() });
        }
        let k = basis_size(self.n(), deg);
        let bi = MultiIndex::new(b.to_vec());
        let m: Vec<f64> = self
            .monomials
            .iter()
            .take(k)
            .map(|a| self.measure.moment(a.add(&bi).exps()))
            .collect::<Result<_, _>>()?;
        Ok((0..k).map(|i| (0..=i).map(|j| self.coeffs[(i, j)] * m[j]).sum()).collect())
    }
}

/// Product basis P_{α¹}(x¹)⋯P_{αᵐ}(xᵐ) on X = ΠX_i.
#[derive(Debug, Clone)]
pub struct ProductBasis {
    set: SimpleSetProduct,
    factors: Vec<KernelBasis>,
}

/// Graded components f_{j₁…j_m} keyed by per-factor degrees.
pub type GradedComponents = BTreeMap<Vec<usize>, Polynomial>;

impl ProductBasis {
    /// Builds each factor basis up to `max_degree` (or the default cap).
    pub fn new(set: &SimpleSetProduct, max_degree: Option<usize>) -> Result<Self, KernelError> {
        let factors = ProductMeasure::new(set)
            .factors
            .into_iter()
            .map(|m| orthonormal_basis(m, max_degree.unwrap_or_else(|| default_max_degree(m.n()))))
            .collect::<Result<_, _>>()?;
        Ok(ProductBasis { set: set.clone(), factors })
    }

    pub fn set(&self) -> &SimpleSetProduct {
        &self.set
    }

    pub fn factors(&self) -> &[KernelBasis] {
        &self.factors
    }

    pub fn n(&self) -> usize {
        self.set.n()
    }

    /// Largest total degree every product element up to which is available.
    pub fn max_degree(&self) -> usize {
        self.factors.iter().map(KernelBasis::max_degree).min().unwrap_or(0)
    }

    pub fn measure(&self) -> ProductMeasure {
        ProductMeasure::new(&self.set)
    }

    /// Coefficients ⟨f, P_{a₁}⋯P_{a_m}⟩_μ keyed by factor indices (a₁, …, a_m).
    pub fn coefficients(&self, f: &Polynomial) -> Result<HashMap<Vec<usize>, f64>, KernelError> {
        if f.n() != self.n() {
            return Err(KernelError::Dimension { expected: self.n(), found: f.n() });
        }
        let offsets = self.set.offsets();
        let mut out: HashMap<Vec<usize>, f64> = HashMap::new();
        for (beta, c) in f.terms() {
            let proj: Vec<Vec<f64>> = self
                .factors
                .iter()
                .zip(&offsets)
                .map(|(fb, &o)| fb.project_monomial(&beta.exps()[o..o + fb.n()]))
                .collect::<Result<_, _>>()?;
            let mut idx = vec![0usize; proj.len()];
            'outer: loop {
                let w: f64 = idx.iter().zip(&proj).map(|(&i, p)| p[i]).product();
                if w != 0.0 {
                    *out.entry(idx.clone()).or_insert(0.0) += c * w;
                }
                for k in (0..idx.len()).rev() {
                    idx[k] += 1;
                    if idx[k] < proj[k].len() {
                        continue 'outer;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }
        Ok(out)
    }

    /// Per-factor degrees (|a₁|, …, |a_m|) of a product element.
    pub fn multi_degree(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().zip(&self.factors).map(|(&i, fb)| fb.degree_of(i)).collect()
    }

    /// The product element as a polynomial in all n variables.
    pub fn element(&self, idx: &[usize]) -> Polynomial {
        let n = self.n();
        idx.iter()
            .zip(&self.factors)
            .zip(self.set.offsets())
            .fold(Polynomial::constant(n, 1.0), |acc, ((&i, fb), o)| &acc * &fb.polynomial(i).embed(n, o))
    }

    /// f = Σ f_{j₁…j_m} with f_{j₁…j_m} in the eigenspace S_{j₁…j_m}.
    pub fn graded_decompose(&self, f: &Polynomial, k: usize) -> Result<GradedComponents, KernelError> {
        let deg = f.degree();
        let cap = k.min(self.max_degree());
        if deg > cap {
            return Err(KernelError::DegreeOverflow { degree: deg, max: cap });
        }
        let mut out = GradedComponents::new();
        let mut coeffs: Vec<(Vec<usize>, f64)> = self.coefficients(f)?.into_iter().collect();
        coeffs.sort_by(|a, b| a.0.cmp(&b.0));
        for (idx, c) in coeffs {
            if c.abs() < 1e-14 {
                continue;
            }
            let key = self.multi_degree(&idx);
            let term = self.element(&idx).scale(c);
            let slot = out.entry(key).or_insert_with(|| Polynomial::zero(self.n()));
            *slot = &*slot + &term;
        }
        Ok(out)
    }
}

/// Graded decomposition of f up to degree k.
pub fn graded_decompose(basis: &ProductBasis, f: &Polynomial, k: usize) -> Result<GradedComponents, KernelError> {
    basis.graded_decompose(f, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::{SimpleFactor, SimpleKind};

    fn interval(d: usize) -> KernelBasis {
        orthonormal_basis(ReferenceMeasure::new(SimpleFactor::new(SimpleKind::Ball, 1, 1.0).unwrap()), d).unwrap()
    }

    fn close(p: &Polynomial, q: &Polynomial, tol: f64) -> bool {
        (p - q).l1_norm() < tol
    }

    #[test]
    fn chebyshev_normalization() {
        let b = interval(2);
        let s2 = std::f64::consts::SQRT_2;
        assert!(close(&b.polynomial(0), &Polynomial::constant(1, 1.0), 1e-12));
        assert!(close(&b.polynomial(1), &Polynomial::var(1, 0).scale(s2), 1e-12));
        let p2 = Polynomial::from_terms(1, vec![(vec![2], 2.0 * s2), (vec![0], -s2)]).unwrap();
        assert!(close(&b.polynomial(2), &p2, 1e-12));
    }

    #[test]
    fn orthonormal_under_moments() {
        for f in [
            SimpleFactor::new(SimpleKind::Ball, 2, 1.5).unwrap(),
            SimpleFactor::new(SimpleKind::Simplex, 2, 1.0).unwrap(),
            SimpleFactor::new(SimpleKind::Hypercube, 1, 2.0).unwrap(),
        ] {
            let m = ReferenceMeasure::new(f);
            let b = orthonormal_basis(m, 5).unwrap();
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let pq = &b.polynomial(i) * &b.polynomial(j);
                    let ip: f64 = pq.terms().map(|(a, c)| c * m.moment(a.exps()).unwrap()).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-8, "{f:?} {i} {j}: {ip}");
                }
                assert_eq!(b.polynomial(i).degree(), b.degree_of(i));
            }
        }
    }

    #[test]
    fn kernel_at_endpoint() {
        let b = interval(2);
        let total: f64 = (0..=2).map(|j| b.component_kernel(j, &[1.0], &[1.0]).unwrap()).sum();
        assert!((total - 5.0).abs() < 1e-12);
        assert!(matches!(b.component_kernel(3, &[0.0], &[0.0]), Err(KernelError::DegreeOverflow { .. })));
    }

    #[test]
    fn ill_conditioning_reports_degree() {
        let m = ReferenceMeasure::new(SimpleFactor::new(SimpleKind::Ball, 1, 1.0).unwrap());
        match orthonormal_basis(m, 60) {
            Err(KernelError::IllConditioned { degree, .. }) => assert!(degree > 8 && degree <= 60),
            other => panic!("expected ill-conditioning, got {other:?}"),
        }
    }

    #[test]
    fn product_element_and_decomposition() {
        let set = SimpleSetProduct::new(vec![
            SimpleFactor::new(SimpleKind::Ball, 1, 1.0).unwrap(),
            SimpleFactor::new(SimpleKind::Ball, 1, 1.0).unwrap(),
        ])
        .unwrap();
        let pb = ProductBasis::new(&set, Some(4)).unwrap();
        let x1x2 = Polynomial::from_terms(2, vec![(vec![1, 1], 1.0)]).unwrap();
        assert!(close(&pb.element(&[1, 1]), &x1x2.scale(2.0), 1e-12));
        let parts = pb.graded_decompose(&x1x2, 2).unwrap();
        assert_eq!(parts.len(), 1);
        assert!(close(&parts[&vec![1, 1]], &x1x2, 1e-12));
    }

    #[test]
    fn interval_decompositions() {
        let set = SimpleSetProduct::single(SimpleKind::Ball, 1, 1.0).unwrap();
        let pb = ProductBasis::new(&set, Some(4)).unwrap();
        let f = Polynomial::from_terms(1, vec![(vec![0], 1.0), (vec![1], 1.0)]).unwrap();
        let parts = pb.graded_decompose(&f, 1).unwrap();
        assert!(close(&parts[&vec![0]], &Polynomial::constant(1, 1.0), 1e-12));
        assert!(close(&parts[&vec![1]], &Polynomial::var(1, 0), 1e-12));
        let sq = Polynomial::from_terms(1, vec![(vec![2], 1.0)]).unwrap();
        let parts = pb.graded_decompose(&sq, 2).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(close(&parts[&vec![0]], &Polynomial::constant(1, 0.5), 1e-12));
        let p2 = Polynomial::from_terms(1, vec![(vec![2], 1.0), (vec![0], -0.5)]).unwrap();
        assert!(close(&parts[&vec![2]], &p2, 1e-12));
        assert!(matches!(pb.graded_decompose(&sq, 1), Err(KernelError::DegreeOverflow { .. })));
    }
}
