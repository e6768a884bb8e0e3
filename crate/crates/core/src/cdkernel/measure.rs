use libm::lgamma;
use num_bigint::BigInt;
use num_rational::BigRational;

use super::KernelError;
use crate::polycore::MultiIndex;
use crate::semialg::{SimpleFactor, SimpleKind, SimpleSetProduct};

/// Probability measure on a simple set with closed-form moments.
///
/// * ball B_R: density ∝ (R² − ‖x‖²)^{−1/2}
/// * simplex Δ_K: Dirichlet(½, …, ½) scaled by K
/// * hypercube [−R, R]^n: product of arcsine (Chebyshev) laws
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMeasure {
    pub factor: SimpleFactor,
}

/// Γ(a + k) / Γ(a)
fn rising(a: f64, k: u32) -> f64 {
    (lgamma(a + k as f64) - lgamma(a)).exp()
}

impl ReferenceMeasure {
    pub fn new(factor: SimpleFactor) -> Self {
        ReferenceMeasure { factor }
    }

    pub fn n(&self) -> usize {
        self.factor.n
    }

    /// ∫ x^α dμ
    pub fn moment(&self, alpha: &[u32]) -> Result<f64, KernelError> {
        let f = &self.factor;
        if alpha.len() != f.n {
            return Err(KernelError::Dimension { expected: f.n, found: alpha.len() });
        }
        let deg: u32 = alpha.iter().sum();
        let scale = f.scale.powi(deg as i32);
        let n = f.n as f64;
        let value = match f.kind {
            SimpleKind::Ball => {
                if alpha.iter().any(|a| a % 2 == 1) {
                    return Ok(0.0);
                }
                let half: u32 = deg / 2;
                let num: f64 = alpha.iter().map(|&a| rising(0.5, a / 2)).product();
                // Normalizer Γ(n/2 + ½) / Γ(|β| + n/2 + ½).
                num / rising(0.5 * n + 0.5, half)
            }
            SimpleKind::Simplex => {
                let num: f64 = alpha.iter().map(|&a| rising(0.5, a)).product();
                num / rising(0.5 * (n + 1.0), deg)
            }
            SimpleKind::Hypercube => {
                if alpha.iter().any(|a| a % 2 == 1) {
                    return Ok(0.0);
                }
                alpha.iter().map(|&a| rising(0.5, a / 2) / rising(1.0, a / 2)).product()
            }
        };
        Ok(value * scale)
    }
}

/// (a)_k with a = num / 2.
fn rising_half(num: i64, k: u32) -> BigRational {
    let mut acc = BigRational::from_integer(BigInt::from(1));
    for i in 0..k as i64 {
        acc *= BigRational::new(BigInt::from(num + 2 * i), BigInt::from(2));
    }
    acc
}

impl ReferenceMeasure {
    /// ∫ x^α dμ at unit scale, exactly.
    pub fn unit_moment_exact(&self, alpha: &[u32]) -> Result<BigRational, KernelError> {
        let f = &self.factor;
        if alpha.len() != f.n {
            return Err(KernelError::Dimension { expected: f.n, found: alpha.len() });
        }
        let zero = BigRational::from_integer(BigInt::from(0));
        let deg: u32 = alpha.iter().sum();
        let n = f.n as i64;
        Ok(match f.kind {
            SimpleKind::Ball if alpha.iter().any(|a| a % 2 == 1) => zero,
            SimpleKind::Ball => alpha.iter().map(|&a| rising_half(1, a / 2)).product::<BigRational>() / rising_half(n + 1, deg / 2),
            SimpleKind::Simplex => alpha.iter().map(|&a| rising_half(1, a)).product::<BigRational>() / rising_half(n + 1, deg),
            SimpleKind::Hypercube if alpha.iter().any(|a| a % 2 == 1) => zero,
            SimpleKind::Hypercube => alpha.iter().map(|&a| rising_half(1, a / 2) / rising_half(2, a / 2)).product(),
        })
    }
}

/// μ = ⊗ μ_i on X = Π X_i.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    pub factors: Vec<ReferenceMeasure>,
}

impl ProductMeasure {
    pub fn new(set: &SimpleSetProduct) -> Self {
        ProductMeasure { factors: set.factors().iter().map(|f| ReferenceMeasure::new(*f)).collect() }
    }

    pub fn n(&self) -> usize {
        self.factors.iter().map(ReferenceMeasure::n).sum()
    }

    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64, KernelError> {
        if alpha.len() != self.n() {
            return Err(KernelError::Dimension { expected: self.n(), found: alpha.len() });
        }
        let mut acc = 1.0;
        let mut offset = 0;
        for m in &self.factors {
            acc *= m.moment(&alpha.exps()[offset..offset + m.n()])?;
            offset += m.n();
            if acc == 0.0 {
                break;
            }
        }
        Ok(acc)
    }

    /// ℓ_μ(f)
    pub fn integrate(&self, f: &crate::polycore::Polynomial) -> Result<f64, KernelError> {
        f.terms().map(|(a, c)| self.moment(a).map(|m| c * m)).sum()
    }
}
