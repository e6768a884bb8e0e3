use serde::Serialize;

use super::basis::ProductBasis;
use super::KernelError;
use crate::polycore::Polynomial;

/// Per-factor damping sequences λ^{(i)} = (λ^{(i)}_j)_{0 ≤ j ≤ 2r}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelWeights {
    per_factor: Vec<Vec<f64>>,
}

/// Σ_{j≤k} |1 − 1/λ_j| against c(n, k)/r² with c(n, k) = 2(n+1)²k².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightDiagnostic {
    pub sum: f64,
    pub threshold: f64,
}

impl WeightDiagnostic {
    pub fn within(&self) -> bool {
        self.sum <= self.threshold
    }
}

impl KernelWeights {
    /// Validates λ_0 = 1 and λ_j ∈ [½, 1].
    pub fn new(per_factor: Vec<Vec<f64>>) -> Result<Self, KernelError> {
        if per_factor.is_empty() {
            return Err(KernelError::InvalidWeights("no factors".into()));
        }
        for (i, lam) in per_factor.iter().enumerate() {
            match lam.first() {
                None => return Err(KernelError::InvalidWeights(format!("factor {i} has an empty schedule"))),
                Some(&l0) if l0 != 1.0 => {
                    return Err(KernelError::InvalidWeights(format!("factor {i}: λ_0 = {l0}, expected 1")))
                }
                _ => {}
            }
            if let Some((j, l)) = lam.iter().enumerate().find(|(_, l)| !(0.5..=1.0).contains(*l)) {
                return Err(KernelError::InvalidWeights(format!("factor {i}: λ_{j} = {l} outside [1/2, 1]")));
            }
        }
        Ok(KernelWeights { per_factor })
    }

    /// The unperturbed kernel: λ ≡ 1 on degrees 0..=degree.
    pub fn ones(factors: usize, degree: usize) -> Self {
        KernelWeights { per_factor: vec![vec![1.0; degree + 1]; factors] }
    }

    pub fn factors(&self) -> usize {
        self.per_factor.len()
    }

    pub fn schedule(&self, i: usize) -> &[f64] {
        &self.per_factor[i]
    }

    /// Highest degree covered by every factor's schedule.
    pub fn degree(&self) -> usize {
        self.per_factor.iter().map(|l| l.len() - 1).min().unwrap_or(0)
    }

    /// Π λ^{(i)}_{j_i}
    pub fn eigenvalue(&self, degrees: &[usize]) -> Result<f64, KernelError> {
        if degrees.len() != self.per_factor.len() {
            return Err(KernelError::Dimension { expected: self.per_factor.len(), found: degrees.len() });
        }
        degrees
            .iter()
            .zip(&self.per_factor)
            .map(|(&j, lam)| lam.get(j).copied().ok_or(KernelError::DegreeOverflow { degree: j, max: lam.len() - 1 }))
            .product()
    }

    pub fn diagnostic(&self, factor: usize, n: usize, k: usize, r: usize) -> WeightDiagnostic {
        let sum = self.per_factor[factor].iter().take(k + 1).map(|l| (1.0 - 1.0 / l).abs()).sum();
        let c = 2.0 * ((n + 1) as f64).powi(2) * (k as f64).powi(2);
        WeightDiagnostic { sum, threshold: c / (r as f64).powi(2) }
    }
}

/// Which graded pieces of the kernel to evaluate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelSpan {
    /// One eigenspace: Π_i C^{(j_i)}(x_i, y_i).
    Component(Vec<usize>),
    /// Π_i Σ_{j ≤ d} λ^{(i)}_j C^{(j)}(x_i, y_i).
    UpTo(usize),
}

/// Evaluates the (perturbed) Christoffel-Darboux kernel at (x, y).
pub fn kernel_eval(
    basis: &ProductBasis,
    span: &KernelSpan,
    x: &[f64],
    y: &[f64],
    weights: Option<&KernelWeights>,
) -> Result<f64, KernelError> {
    let n = basis.n();
    for v in [x, y] {
        if v.len() != n {
            return Err(KernelError::Dimension { expected: n, found: v.len() });
        }
    }
    let m = basis.factors().len();
    if let Some(w) = weights {
        if w.factors() != m {
            return Err(KernelError::Dimension { expected: m, found: w.factors() });
        }
    }
    let lam = |i: usize, j: usize| -> Result<f64, KernelError> {
        match weights {
            None => Ok(1.0),
            Some(w) => w.schedule(i).get(j).copied().ok_or(KernelError::DegreeOverflow { degree: j, max: w.schedule(i).len() - 1 }),
        }
    };
    let xs = basis.set().split(x);
    let ys = basis.set().split(y);
    let mut acc = 1.0;
    for (i, fb) in basis.factors().iter().enumerate() {
        let term = match span {
            KernelSpan::Component(js) => {
                if js.len() != m {
                    return Err(KernelError::Dimension { expected: m, found: js.len() });
                }
                lam(i, js[i])? * fb.component_kernel(js[i], xs[i], ys[i])?
            }
            KernelSpan::UpTo(d) => {
                let mut s = 0.0;
                for j in 0..=*d {
                    s += lam(i, j)? * fb.component_kernel(j, xs[i], ys[i])?;
                }
                s
            }
        };
        acc *= term;
    }
    Ok(acc)
}

/// Applies C_{2r}[X, μ, λ] (or its inverse) to f through its graded components.
pub fn operator_apply(basis: &ProductBasis, weights: &KernelWeights, f: &Polynomial, invert: bool) -> Result<Polynomial, KernelError> {
    if weights.factors() != basis.factors().len() {
        return Err(KernelError::Dimension { expected: basis.factors().len(), found: weights.factors() });
    }
    let parts = basis.graded_decompose(f, f.degree())?;
    let mut out = Polynomial::zero(basis.n());
    for (degrees, part) in parts {
        let ev = weights.eigenvalue(&degrees)?;
        let s = if invert {
            if ev <= 0.0 {
                return Err(KernelError::ZeroEigenvalue(degrees));
            }
            1.0 / ev
        } else {
            ev
        };
        out = &out + &part.scale(s);
    }
    Ok(out)
}

/// The kernel slice x ↦ C_{2r}[X, μ, λ](x, y) as a polynomial.
pub fn kernel_slice(basis: &ProductBasis, weights: &KernelWeights, degree: usize, y: &[f64]) -> Result<Polynomial, KernelError> {
    let n = basis.n();
    if y.len() != n {
        return Err(KernelError::Dimension { expected: n, found: y.len() });
    }
    let ys = basis.set().split(y);
    let mut out = Polynomial::constant(n, 1.0);
    for (i, (fb, o)) in basis.factors().iter().zip(basis.set().offsets()).enumerate() {
        if degree > fb.max_degree() {
            return Err(KernelError::DegreeOverflow { degree, max: fb.max_degree() });
        }
        let py = fb.eval(ys[i], degree);
        let mut slice = Polynomial::zero(fb.n());
        for j in 0..=degree {
            let l = weights.schedule(i).get(j).copied().ok_or(KernelError::DegreeOverflow { degree: j, max: weights.schedule(i).len() - 1 })?;
            for a in fb.component_range(j) {
                slice = &slice + &fb.polynomial(a).scale(l * py[a]);
            }
        }
        out = &out * &slice.embed(n, o);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::{SimpleKind, SimpleSetProduct};

    fn interval() -> ProductBasis {
        ProductBasis::new(&SimpleSetProduct::single(SimpleKind::Ball, 1, 1.0).unwrap(), Some(8)).unwrap()
    }

    #[test]
    fn weight_validation() {
        assert!(KernelWeights::new(vec![vec![1.0, 0.5, 0.7]]).is_ok());
        assert!(KernelWeights::new(vec![vec![0.9, 0.5]]).is_err());
        assert!(KernelWeights::new(vec![vec![1.0, 0.4]]).is_err());
        assert!(KernelWeights::new(vec![vec![]]).is_err());
    }

    #[test]
    fn diagnostic_threshold() {
        let w = KernelWeights::new(vec![vec![1.0, 0.5, 1.0]]).unwrap();
        let d = w.diagnostic(0, 1, 2, 4);
        assert!((d.sum - 1.0).abs() < 1e-15);
        assert!((d.threshold - 2.0).abs() < 1e-15);
        assert!(d.within());
    }

    #[test]
    fn full_kernel_at_endpoint() {
        let v = kernel_eval(&interval(), &KernelSpan::UpTo(2), &[1.0], &[1.0], None).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
        let c0 = kernel_eval(&interval(), &KernelSpan::Component(vec![0]), &[0.3], &[-0.8], None).unwrap();
        assert!((c0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_and_round_trip() {
        let pb = interval();
        let x = Polynomial::var(1, 0);
        let w = KernelWeights::new(vec![vec![1.0, 0.5, 1.0]]).unwrap();
        let half = operator_apply(&pb, &w, &x, false).unwrap();
        assert!((&half - &x.scale(0.5)).l1_norm() < 1e-12);
        let twice = operator_apply(&pb, &w, &x, true).unwrap();
        assert!((&twice - &x.scale(2.0)).l1_norm() < 1e-12);
        let f = Polynomial::from_terms(1, vec![(vec![2], 3.0), (vec![1], -1.0), (vec![0], 0.25)]).unwrap();
        let back = operator_apply(&pb, &w, &operator_apply(&pb, &w, &f, false).unwrap(), true).unwrap();
        assert!((&back - &f).l1_norm() < 1e-9);
    }

    #[test]
    fn identity_weights_reproduce() {
        let pb = interval();
        let f = Polynomial::from_terms(1, vec![(vec![4], 1.0), (vec![3], -2.0), (vec![0], 0.5)]).unwrap();
        let out = operator_apply(&pb, &KernelWeights::ones(1, 4), &f, false).unwrap();
        assert!((&out - &f).l1_norm() < 1e-10);
    }

    #[test]
    fn slice_matches_eval() {
        let pb = interval();
        let w = KernelWeights::new(vec![vec![1.0, 0.75, 0.5]]).unwrap();
        let s = kernel_slice(&pb, &w, 2, &[0.4]).unwrap();
        for x in [-1.0, -0.2, 0.9] {
            let direct = kernel_eval(&pb, &KernelSpan::UpTo(2), &[x], &[0.4], Some(&w)).unwrap();
            assert!((s.eval_unchecked(&[x]) - direct).abs() < 1e-12);
        }
    }
}
