use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::DistError;
use crate::hierarchy::{solve_relaxation, HierarchyKind, HierarchyOptions, Side};
use crate::momentkit::Certificate;
use crate::polycore::{enumerate_monomials, Polynomial};
use crate::semialg::{estimate_minimum, SemiAlgebraicSet};

/// Sampling effort behind each estimate of max_x ⟨c, v_k(x)⟩.
const SUPPORT_SAMPLES: usize = 2000;
const SUPPORT_STARTS: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct SupportGap {
    /// max ⟨c, π_k(y)⟩ over the level-r pseudo-moment set.
    pub pseudo: f64,
    /// max_x ⟨c, v_k(x)⟩ over X (estimate).
    pub moment: f64,
    pub gap: f64,
    /// gap / ‖c‖, a lower bound on d_k.
    pub normalized: f64,
    pub status: String,
}

/// Polynomial Σ c_α x^α for a vector in the graded basis of degree ≤ k.
pub fn direction_polynomial(n: usize, k: usize, c: &[f64]) -> Result<Polynomial, DistError> {
    let basis = enumerate_monomials(n, k);
    if c.len() != basis.len() {
        return Err(DistError::Dimension { expected: basis.len(), found: c.len() });
    }
    let mut p = Polynomial::zero(n);
    for (a, v) in basis.iter().zip(c) {
        p.add_term(a.clone(), *v);
    }
    Ok(p)
}

/// h_pseudo(c) − h_moment(c) for one direction c.
pub fn support_gap(
    set: &SemiAlgebraicSet,
    cert: Certificate,
    r: usize,
    k: usize,
    c: &[f64],
    seed: u64,
    opts: &HierarchyOptions,
) -> Result<SupportGap, DistError> {
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(DistError::Invalid("direction must be nonzero".into()));
    }
    if k > 2 * r {
        return Err(DistError::Invalid(format!("order k = {k} exceeds 2r = {}", 2 * r)));
    }
    let p = direction_polynomial(set.n(), k, c)?;
    let neg = -&p;
    let solved = solve_relaxation(&neg, set, HierarchyKind { certificate: cert, side: Side::Moment }, r, opts)?;
    if solved.result.status == sdpcore::Status::InfeasibleCertificate {
        return Err(DistError::Hierarchy(crate::hierarchy::HierarchyError::NotOptimal(solved.result.status)));
    }
    let pseudo = -solved.result.bound;
    let moment = -estimate_minimum(&neg, set, SUPPORT_SAMPLES, SUPPORT_STARTS, seed)?.value;
    let gap = pseudo - moment;
    Ok(SupportGap { pseudo, moment, gap, normalized: gap / norm, status: solved.result.status.to_string() })
}

/// Seeded unit directions in ℝ^{s(n,k)}.
pub fn random_directions(n: usize, k: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let s = enumerate_monomials(n, k).len();
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(i as u64));
            let v: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut rng)).collect();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / nv).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HausdorffEstimate {
    pub r: usize,
    pub k: usize,
    /// max over directions of the normalized support gap.
    pub lower_bound: f64,
    pub directions: usize,
    /// Directions left out of the maximum because their solve did not converge.
    pub skipped: usize,
    pub seed: u64,
    /// Every normalized gap, skipped directions included.
    pub gaps: Vec<f64>,
}

/// Direction-sampled lower bound on d_k at level r.
pub fn hausdorff_lower_bound(
    set: &SemiAlgebraicSet,
    cert: Certificate,
    r: usize,
    k: usize,
    directions: usize,
    seed: u64,
    opts: &HierarchyOptions,
) -> Result<HausdorffEstimate, DistError> {
    if directions == 0 {
        return Err(DistError::Invalid("need at least one direction".into()));
    }
    let dirs = random_directions(set.n(), k, directions, seed);
    let results: Vec<SupportGap> = dirs
        .par_iter()
        .enumerate()
        .map(|(i, c)| support_gap(set, cert, r, k, c, seed.wrapping_add(i as u64), opts))
        .collect::<Result<_, _>>()?;
    // An unconverged moment bound can overshoot the pseudo-moment support and fake a gap.
    let optimal = sdpcore::Status::Optimal.to_string();
    let skipped = results.iter().filter(|g| g.status != optimal).count();
    if skipped == results.len() {
        return Err(DistError::Hierarchy(crate::hierarchy::HierarchyError::NotOptimal(sdpcore::Status::MaxIters)));
    }
    let lower_bound = results.iter().filter(|g| g.status == optimal).map(|g| g.normalized).fold(f64::NEG_INFINITY, f64::max);
    let gaps = results.iter().map(|g| g.normalized).collect();
    Ok(HausdorffEstimate { r, k, lower_bound, directions, skipped, seed, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::{make_catalog_set, Catalog};

    #[test]
    fn normalization_direction() {
        let x = make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap();
        let g = support_gap(&x, Certificate::T, 1, 2, &[1.0, 0.0, 0.0], 0, &HierarchyOptions::default()).unwrap();
        assert!(g.gap.abs() < 1e-6);
        let g = support_gap(&x, Certificate::T, 1, 2, &[0.0, 0.0, 1.0], 0, &HierarchyOptions::default()).unwrap();
        assert!(g.gap.abs() < 1e-6 && (g.moment - 1.0).abs() < 1e-9, "{g:?}");
        assert!(support_gap(&x, Certificate::T, 1, 2, &[0.0; 3], 0, &HierarchyOptions::default()).is_err());
    }

    #[test]
    fn scalar_equality_forces_second_moment() {
        let x = SemiAlgebraicSet::new(1, vec![], vec![Polynomial::var(1, 0)]).unwrap().archimedean_augment(1.0).unwrap();
        let g = support_gap(&x, Certificate::R, 1, 2, &[0.0, 0.0, 1.0], 0, &HierarchyOptions::default()).unwrap();
        assert!(g.gap.abs() < 1e-6, "{g:?}");
    }

    #[test]
    fn single_direction_matches_gap() {
        let x = make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap();
        let opts = HierarchyOptions::default();
        let h = hausdorff_lower_bound(&x, Certificate::Q, 2, 2, 1, 5, &opts).unwrap();
        let c = random_directions(1, 2, 1, 5).remove(0);
        let g = support_gap(&x, Certificate::Q, 2, 2, &c, 5, &opts).unwrap();
        assert!((h.lower_bound - g.normalized).abs() < 1e-9);
    }
}
