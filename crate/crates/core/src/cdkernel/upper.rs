use std::time::Instant;

use sdpcore::{Block, ConicProgram, SparseMatrix, Status};
use serde::Serialize;

use super::basis::ProductBasis;
use super::kernel::{kernel_slice, operator_apply, KernelWeights};
use super::measure::ProductMeasure;
use super::KernelError;
use crate::hierarchy::{solve_relaxation, HierarchyKind, HierarchyOptions, Side};
use crate::momentkit::{preordering_products, Certificate, ConstraintKind};
use crate::polycore::{enumerate_monomials, Polynomial};
use crate::semialg::{estimate_minimum, SimpleSetProduct};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Sample count used for each diagonal-kernel maximization.
const TAU_SAMPLES: usize = 4000;
const TAU_STARTS: usize = 12;

/// Λ(X, k) ≤ sqrt(Π τ(X_i, k)), with the per-factor τ values.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicBound {
    pub value: f64,
    pub taus: Vec<f64>,
}

/// τ(X_i, k) = max_{j ≤ k} max_x C^{(j)}(x, x) per factor, by grid plus local polish.
pub fn harmonic_constant_bound(basis: &ProductBasis, k: usize, seed: u64) -> Result<HarmonicBound, KernelError> {
    if k > basis.max_degree() {
        return Err(KernelError::DegreeOverflow { degree: k, max: basis.max_degree() });
    }
    let mut taus = Vec::with_capacity(basis.factors().len());
    for fb in basis.factors() {
        let factor = fb.measure().factor;
        let set = SimpleSetProduct::single(factor.kind, factor.n, factor.scale)?.to_set()?;
        let mut tau = 1.0_f64;
        for j in 1..=k {
            let diag = fb.diagonal_kernel(j)?;
            let est = estimate_minimum(&-&diag, &set, TAU_SAMPLES, TAU_STARTS, seed.wrapping_add(j as u64))?;
            tau = tau.max(-est.value);
        }
        taus.push(tau);
    }
    Ok(HarmonicBound { value: taus.iter().product::<f64>().sqrt(), taus })
}

/// Result of one upper-bound SDP.
#[derive(Debug, Clone, Serialize)]
pub struct UpperBound {
    pub level: usize,
    pub certificate: Certificate,
    pub value: f64,
    pub status: String,
    pub iterations: usize,
    pub seconds: f64,
}

/// ub(f, Q(X))_r or ub(f, T(X))_r: inf ∫ f q dμ over q in the truncated cone with ∫ q dμ = 1.
///
/// Each generator g_J carries a Gram block G_J over monomials of degree ≤ r − ⌈g_J⌉,
/// so the program has one equality row and objective entries ∫ f g_J x^{a+b} dμ.
pub fn upper_bound_sdp(
    f: &Polynomial,
    set: &SimpleSetProduct,
    cert: Certificate,
    r: usize,
    measure: &ProductMeasure,
    opts: &HierarchyOptions,
) -> Result<UpperBound, KernelError> {
    let start = Instant::now();
    if cert == Certificate::R {
        return Err(KernelError::Invalid("upper bounds use the Q or T cone".into()));
    }
    let n = set.n();
    if f.n() != n || measure.n() != n {
        return Err(KernelError::Dimension { expected: n, found: if f.n() != n { f.n() } else { measure.n() } });
    }
    if r == 0 {
        return Err(KernelError::Invalid("level must be at least 1".into()));
    }
    let x = set.to_set()?;
    let specs: Vec<_> = preordering_products(&x, r, cert).into_iter().filter(|s| s.kind == ConstraintKind::Psd).collect();
    let largest = crate::polycore::basis_size(n, r);
    if largest > opts.max_psd_size {
        return Err(KernelError::Invalid(format!("PSD block of order {largest} exceeds the cap {}", opts.max_psd_size)));
    }
    let mut blocks = Vec::new();
    let mut trip = Vec::new();
    let mut c = Vec::new();
    for s in &specs {
        let basis = enumerate_monomials(n, s.matrix_order);
        let size = basis.len();
        blocks.push(Block::Psd(size));
        let fg = f * &s.weight;
        for i in 0..size {
            for j in i..size {
                let scale = if i == j { 1.0 } else { SQRT2 };
                let shift = Polynomial::monomial(basis.monomial_at(i).add(basis.monomial_at(j)), 1.0);
                let mass = measure.integrate(&(&s.weight * &shift))?;
                let obj = measure.integrate(&(&fg * &shift))?;
                trip.push((0, c.len(), scale * mass));
                c.push(scale * obj);
            }
        }
    }
    let a = SparseMatrix::from_triplets(1, c.len(), &trip)?;
    let program = ConicProgram::new(blocks, c, a, vec![1.0])?;
    let sol = sdpcore::solve(&program, &opts.solver)?;
    if sol.status == Status::InfeasibleCertificate {
        return Err(KernelError::Solver(sdpcore::SdpError::Dimension("upper-bound program reported infeasible".into())));
    }
    Ok(UpperBound {
        level: r,
        certificate: cert,
        value: sol.primal_value,
        status: sol.status.to_string(),
        iterations: sol.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// (C_{2r}[X, μ, λ] f)(x*), the value of the kernel density σ = C_{2r}(·, x*).
pub fn upper_bound_kernel(
    f: &Polynomial,
    basis: &ProductBasis,
    r: usize,
    weights: &KernelWeights,
    x_star: &[f64],
) -> Result<f64, KernelError> {
    if f.degree() > 2 * r {
        return Err(KernelError::DegreeOverflow { degree: f.degree(), max: 2 * r });
    }
    if x_star.len() != basis.n() {
        return Err(KernelError::Dimension { expected: basis.n(), found: x_star.len() });
    }
    if !basis.set().contains(x_star, 1e-9) {
        return Err(KernelError::Invalid("x* lies outside X".into()));
    }
    let g = operator_apply(basis, weights, f, false)?;
    Ok(g.eval_unchecked(x_star))
}

/// Outcome of the optional preordering membership test for a kernel slice.
#[derive(Debug, Clone, Serialize)]
pub struct SliceCheck {
    /// max c with C(·, y) − c in T(X) at the slice's level.
    pub margin: f64,
    pub member: bool,
    pub level: usize,
}

/// Whether x ↦ C_{2r}[X, μ, λ](x, y) lies in the truncated preordering.
///
/// Solves an SOS program of size s(n, r·m); expensive beyond small cases.
pub fn kernel_slice_check(
    basis: &ProductBasis,
    weights: &KernelWeights,
    r: usize,
    y: &[f64],
    opts: &HierarchyOptions,
) -> Result<SliceCheck, KernelError> {
    let slice = kernel_slice(basis, weights, 2 * r, y)?;
    let set = basis.set().to_set()?;
    let level = r * basis.factors().len();
    let kind = HierarchyKind { certificate: Certificate::T, side: Side::Sos };
    let solved = solve_relaxation(&slice, &set, kind, level, opts)?;
    let margin = solved.result.bound;
    Ok(SliceCheck { margin, member: margin >= -2.0 * opts.tol, level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::{SimpleFactor, SimpleKind};

    fn interval() -> SimpleSetProduct {
        SimpleSetProduct::single(SimpleKind::Ball, 1, 1.0).unwrap()
    }

    #[test]
    fn interval_harmonic_constant() {
        let pb = ProductBasis::new(&interval(), Some(4)).unwrap();
        let h = harmonic_constant_bound(&pb, 2, 1).unwrap();
        assert!((h.value - 2f64.sqrt()).abs() < 1e-6, "{}", h.value);
        assert_eq!(harmonic_constant_bound(&pb, 0, 1).unwrap().value, 1.0);
        let sq = SimpleSetProduct::new(vec![SimpleFactor::new(SimpleKind::Ball, 1, 1.0).unwrap(); 2]).unwrap();
        let h = harmonic_constant_bound(&ProductBasis::new(&sq, Some(4)).unwrap(), 2, 1).unwrap();
        assert!((h.value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn linear_upper_bound() {
        let set = interval();
        let mu = ProductMeasure::new(&set);
        let opts = HierarchyOptions::default();
        let ub = upper_bound_sdp(&Polynomial::var(1, 0), &set, Certificate::Q, 1, &mu, &opts).unwrap();
        assert!((ub.value + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5, "{}", ub.value);
        let five = upper_bound_sdp(&Polynomial::constant(1, 5.0), &set, Certificate::T, 2, &mu, &opts).unwrap();
        assert!((five.value - 5.0).abs() < 1e-5);
    }

    #[test]
    fn kernel_upper_bounds() {
        let pb = ProductBasis::new(&interval(), Some(8)).unwrap();
        let x = Polynomial::var(1, 0);
        let w = KernelWeights::new(vec![vec![1.0, 0.5, 1.0]]).unwrap();
        assert!((upper_bound_kernel(&x, &pb, 1, &w, &[-1.0]).unwrap() + 0.5).abs() < 1e-12);
        let sq = Polynomial::from_terms(1, vec![(vec![2], 1.0)]).unwrap();
        let w = KernelWeights::new(vec![vec![1.0, 1.0, 0.5]]).unwrap();
        assert!((upper_bound_kernel(&sq, &pb, 1, &w, &[0.0]).unwrap() - 0.25).abs() < 1e-12);
        let ones = KernelWeights::ones(1, 2);
        assert!((upper_bound_kernel(&sq, &pb, 1, &ones, &[0.3]).unwrap() - 0.09).abs() < 1e-12);
        assert!(upper_bound_kernel(&sq, &pb, 1, &ones, &[1.5]).is_err());
    }
}
