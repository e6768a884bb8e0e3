use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::DistError;
use crate::polycore::{enumerate_monomials, Polynomial};
use crate::semialg::{distance_to_set, project_to_variety, random_in_box, SemiAlgebraicSet};

/// Exterior points are kept when their violation lies in this shell.
pub const SHELL: (f64, f64) = (1e-4, 1e-1);
/// Minimum number of shell points for a fit.
pub const MIN_EXTERIOR: usize = 50;
const DISTANCE_STARTS: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct LojasiewiczFit {
    /// Slope of log d(x, X) against log violation(x).
    pub exponent: f64,
    /// exp(intercept)
    pub constant: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line y = a + b·x; returns (a, b, R²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (a, b, r2)
}

/// Draws a log-uniform violation target in the shell and walks a random box
/// point toward X until its violation lands in the shell.
fn shell_point(set: &SemiAlgebraicSet, bounds: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let x = random_in_box(bounds, rng);
    let v = set.violation_unchecked(&x);
    if (SHELL.0..=SHELL.1).contains(&v) {
        return Some(x);
    }
    if v < SHELL.0 {
        return None;
    }
    // Bisect along the segment to the nearest point of X.
    let (_, z) = distance_to_set(set, &x, 2, rng.gen()).ok()?;
    let target = (SHELL.0.ln() + rng.gen::<f64>() * (SHELL.1.ln() - SHELL.0.ln())).exp();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let t = 0.5 * (lo + hi);
        let p: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a + t * (b - a)).collect();
        if set.violation_unchecked(&p) < target {
            lo = t;
        } else {
            hi = t;
        }
    }
    let p: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a + hi * (b - a)).collect();
    let v = set.violation_unchecked(&p);
    (SHELL.0..=SHELL.1).contains(&v).then_some(p)
}

/// Fits the exponent Ł in d(x, X) ≈ c · violation(x)^Ł over exterior shell points.
pub fn lojasiewicz_fit(set: &SemiAlgebraicSet, sample_box: &[(f64, f64)], count: usize, seed: u64) -> Result<LojasiewiczFit, DistError> {
    if sample_box.len() != set.n() {
        return Err(DistError::Dimension { expected: set.n(), found: sample_box.len() });
    }
    if count < MIN_EXTERIOR {
        return Err(DistError::InsufficientSamples { found: count, needed: MIN_EXTERIOR });
    }
    // Distance searches need a box; unbounded sets borrow the sampling box.
    let boxed;
    let set = if set.bounding_box().is_some() {
        set
    } else {
        boxed = set.clone().with_bounds(sample_box.to_vec())?;
        &boxed
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(count);
    let mut attempts = 0;
    while pts.len() < count && attempts < 50 * count {
        attempts += 1;
        if let Some(p) = shell_point(set, sample_box, &mut rng) {
            pts.push(p);
        }
    }
    if pts.len() < MIN_EXTERIOR {
        return Err(DistError::InsufficientSamples { found: pts.len(), needed: MIN_EXTERIOR });
    }
    let pairs: Vec<(f64, f64)> = pts
        .par_iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let v = set.violation_unchecked(p);
            let (d, _) = distance_to_set(set, p, DISTANCE_STARTS, seed.wrapping_add(i as u64)).ok()?;
            (d > 0.0 && d.is_finite()).then(|| (v.ln(), d.ln()))
        })
        .collect();
    if pairs.len() < MIN_EXTERIOR {
        return Err(DistError::InsufficientSamples { found: pairs.len(), needed: MIN_EXTERIOR });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (a, b, r2) = linear_fit(&xs, &ys);
    Ok(LojasiewiczFit { exponent: b, constant: a.exp(), r_squared: r2, points: xs.len() })
}

/// Upper bound on sup_{‖x‖ ≤ R} ‖J v_k(x)‖₂ from ‖∇x^α‖ ≤ |α| R^{|α|−1}.
pub fn lipschitz_bound(radius: f64, k: usize, n: usize) -> Result<f64, DistError> {
    if !(radius >= 0.0) {
        return Err(DistError::Invalid(format!("radius {radius} must be nonnegative")));
    }
    let sum: f64 = enumerate_monomials(n, k)
        .iter()
        .map(|a| {
            let d = a.degree();
            match d {
                0 => 0.0,
                1 => 1.0,
                _ => (d as f64 * radius.powi(d as i32 - 1)).powi(2),
            }
        })
        .sum();
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct CqcReport {
    pub holds_on_sample: bool,
    pub min_singular_value: f64,
    pub points_checked: usize,
}

/// Singular values below this count as degenerate.
pub const CQC_FLOOR: f64 = 1e-6;
const ACTIVE_TOL: f64 = 1e-8;

fn subsets(m: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max.min(m) {
        let mut next = Vec::new();
        for s in &frontier {
            for j in s.last().map_or(0, |l| l + 1)..m {
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

/// Samples boundary points where subsets of inequalities are active and
/// checks that the active gradients stay linearly independent.
pub fn cqc_check(set: &SemiAlgebraicSet, count: usize, seed: u64) -> Result<CqcReport, DistError> {
    if set.has_equalities() {
        return Err(DistError::Invalid("constraint qualification check needs an inequality-only set".into()));
    }
    let bounds = set.bounding_box().ok_or(crate::semialg::SetError::NoBoundingBox)?;
    let g = set.inequalities();
    let n = set.n();
    let grads: Vec<Vec<Polynomial>> = g.iter().map(|p| (0..n).map(|i| p.derivative(i)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_sv = f64::INFINITY;
    let mut checked = 0;
    // Up to n + 1 active constraints: n + 1 at a point already breaks independence.
    for j in subsets(g.len(), n + 1) {
        let eqs: Vec<Polynomial> = j.iter().map(|&i| g[i].clone()).collect();
        for _ in 0..count {
            let start = random_in_box(&bounds, &mut rng);
            let Some(x) = project_to_variety(&eqs, &start) else { continue };
            if !set.contains(&x, ACTIVE_TOL) {
                continue;
            }
            let active: Vec<usize> = (0..g.len()).filter(|&i| g[i].eval_unchecked(&x).abs() <= ACTIVE_TOL).collect();
            if active.is_empty() {
                continue;
            }
            let jac = DMatrix::from_fn(active.len(), n, |r, c| grads[active[r]][c].eval_unchecked(&x));
            let sv = if active.len() > n { 0.0 } else { jac.singular_values().min() };
            min_sv = min_sv.min(sv);
            checked += 1;
        }
    }
    if checked == 0 {
        return Err(DistError::InsufficientSamples { found: 0, needed: 1 });
    }
    Ok(CqcReport { holds_on_sample: min_sv >= CQC_FLOOR, min_singular_value: min_sv, points_checked: checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::{make_catalog_set, Catalog};

    fn p1(terms: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(1, terms.iter().map(|(e, c)| (vec![*e], *c))).unwrap()
    }

    #[test]
    fn interval_exponent_one() {
        let x = SemiAlgebraicSet::new(1, vec![p1(&[(1, 1.0)]), p1(&[(0, 1.0), (1, -1.0)])], vec![]).unwrap();
        let fit = lojasiewicz_fit(&x, &[(-1.0, 2.0)], 80, 1).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn double_root_exponent_half() {
        let x = SemiAlgebraicSet::new(1, vec![], vec![p1(&[(2, 1.0)])]).unwrap();
        let fit = lojasiewicz_fit(&x, &[(-1.0, 1.0)], 80, 2).unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn too_few_points() {
        let x = SemiAlgebraicSet::new(1, vec![p1(&[(1, 1.0)])], vec![]).unwrap();
        assert!(matches!(lojasiewicz_fit(&x, &[(-1.0, 1.0)], 10, 0), Err(DistError::InsufficientSamples { .. })));
    }

    #[test]
    fn lipschitz_cases() {
        assert_eq!(lipschitz_bound(1.0, 1, 1).unwrap(), 1.0);
        assert!(lipschitz_bound(2.0, 2, 1).unwrap() >= 17f64.sqrt());
        assert_eq!(lipschitz_bound(0.0, 3, 1).unwrap(), 1.0);
        assert!(lipschitz_bound(-1.0, 1, 1).is_err());
    }

    #[test]
    fn cqc_cases() {
        let ball = make_catalog_set(&Catalog::Ball { n: 2, radius: 1.0 }).unwrap();
        assert!(cqc_check(&ball, 10, 0).unwrap().holds_on_sample);
        let simplex = make_catalog_set(&Catalog::Simplex { n: 2, size: 1.0 }).unwrap();
        let rep = cqc_check(&simplex, 10, 0).unwrap();
        assert!(rep.holds_on_sample, "{rep:?}");
        let sq = p1(&[(2, 1.0)]);
        let degenerate = SemiAlgebraicSet::new(1, vec![sq.clone(), -&sq], vec![]).unwrap().with_bounds(vec![(-1.0, 1.0)]).unwrap();
        let rep = cqc_check(&degenerate, 10, 0).unwrap();
        assert!(!rep.holds_on_sample && rep.min_singular_value < 1e-6);
    }
}
