use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SemiAlgebraicSet, SetError};
use crate::polycore::Polynomial;

/// Points accepted by the samplers satisfy violation ≤ this.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStrategy {
    Grid,
    Sobol,
    BoundaryBiased,
}

impl std::str::FromStr for SampleStrategy {
    type Err = SetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(SampleStrategy::Grid),
            "sobol" => Ok(SampleStrategy::Sobol),
            "boundary" | "boundary-biased" | "boundary_biased" => Ok(SampleStrategy::BoundaryBiased),
            other => Err(SetError::Invalid(format!("unknown sampling strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleReport {
    pub points: Vec<Vec<f64>>,
    pub attempts: usize,
}

/// Jacobian-based projection onto {h = 0}; `None` if Gauss-Newton stalls.
pub fn project_to_variety(equalities: &[Polynomial], x: &[f64]) -> Option<Vec<f64>> {
    if equalities.is_empty() {
        return Some(x.to_vec());
    }
    let n = x.len();
    let grads: Vec<Vec<Polynomial>> = equalities.iter().map(|h| (0..n).map(|i| h.derivative(i)).collect()).collect();
    let mut z = x.to_vec();
    for _ in 0..200 {
        let hv: Vec<f64> = equalities.iter().map(|h| h.eval_unchecked(&z)).collect();
        if hv.iter().all(|v| v.abs() <= 1e-15) {
            return Some(z);
        }
        let jac = DMatrix::from_fn(equalities.len(), n, |i, j| grads[i][j].eval_unchecked(&z));
        let svd = jac.svd(true, true);
        let step = svd.solve(&DVector::from_vec(hv), 1e-14).ok()?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for (zi, si) in z.iter_mut().zip(step.iter()) {
            *zi -= si;
        }
        if step.norm() <= 1e-16 * (1.0 + z.iter().map(|v| v * v).sum::<f64>().sqrt()) {
            break;
        }
    }
    let ok = equalities.iter().all(|h| h.eval_unchecked(&z).abs() <= FEASIBILITY_TOL);
    ok.then_some(z)
}

fn key(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * 1e10).round() as i64).collect()
}

struct Candidates<'a> {
    set: &'a SemiAlgebraicSet,
    bounds: Vec<(f64, f64)>,
}

impl<'a> Candidates<'a> {
    fn scale(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().zip(&self.bounds).map(|(u, (lo, hi))| lo + u * (hi - lo)).collect()
    }

    /// Candidate pushed onto the variety when there are equalities; `None` if rejected.
    fn accept(&self, x: Vec<f64>) -> Option<Vec<f64>> {
        let z = project_to_variety(self.set.equalities(), &x)?;
        self.set.contains(&z, FEASIBILITY_TOL).then_some(z)
    }

    /// Last feasible point on the segment from `inside` towards `outside`.
    fn boundary_between(&self, inside: &[f64], outside: &[f64]) -> Vec<f64> {
        let (mut lo, mut hi) = (0.0, 1.0);
        let at = |t: f64| -> Vec<f64> { inside.iter().zip(outside).map(|(a, b)| a + t * (b - a)).collect() };
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.set.contains(&at(mid), 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(lo)
    }
}

fn sobol_point(i: usize, n: usize, seed: u64) -> Vec<f64> {
    (0..n).map(|d| sobol_burley::sample(i as u32, d as u32, seed as u32) as f64).collect()
}

/// Feasible points of X drawn inside its bounding box.
///
/// Grid and Sobol candidates are rejected against `violation`; when X has
/// equalities each candidate is first pushed onto the variety by Gauss-Newton.
/// The boundary-biased strategy additionally walks segments from interior
/// points to rejected candidates so that half of the output sits on ∂X.
pub fn sample_points(set: &SemiAlgebraicSet, strategy: SampleStrategy, count: usize, seed: u64) -> Result<SampleReport, SetError> {
    let bounds = set.bounding_box().ok_or(SetError::NoBoundingBox)?;
    let n = set.n();
    let cand = Candidates { set, bounds };
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let mut push = |p: Vec<f64>, points: &mut Vec<Vec<f64>>| {
        if seen.insert(key(&p)) {
            points.push(p);
        }
    };

    match strategy {
        SampleStrategy::Grid => {
            let per_axis = ((count.max(1) as f64).powf(1.0 / n as f64).ceil() as usize).max(2);
            let total = per_axis.pow(n as u32);
            let mut idx = vec![0usize; n];
            for _ in 0..total {
                let unit: Vec<f64> = idx.iter().map(|&i| i as f64 / (per_axis - 1) as f64).collect();
                if let Some(p) = cand.accept(cand.scale(&unit)) {
                    push(p, &mut points);
                }
                for d in 0..n {
                    idx[d] += 1;
                    if idx[d] < per_axis {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            if points.is_empty() {
                return Err(SetError::Starvation { accepted: 0, attempts: total });
            }
            Ok(SampleReport { points, attempts: total })
        }
        SampleStrategy::Sobol | SampleStrategy::BoundaryBiased => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut anchors: Vec<Vec<f64>> = Vec::new();
            let mut attempts = 0usize;
            let biased = strategy == SampleStrategy::BoundaryBiased && !set.has_equalities();
            // The Sobol sequence has 2^16 points per dimension.
            let max_attempts = 20_000usize.max(count.saturating_mul(10_000)).min(1 << 16);
            while points.len() < count {
                if attempts >= 10_000 && points.is_empty() {
                    return Err(SetError::Starvation { accepted: points.len(), attempts });
                }
                if attempts >= max_attempts {
                    break;
                }
                let x = cand.scale(&sobol_point(attempts, n, seed));
                attempts += 1;
                match cand.accept(x.clone()) {
                    Some(p) => {
                        if biased {
                            anchors.push(p.clone());
                            if rng.gen_bool(0.5) {
                                push(p, &mut points);
                            } else {
                                // Ray from the interior point to the box edge.
                                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                                let far: Vec<f64> = p
                                    .iter()
                                    .zip(&dir)
                                    .zip(&cand.bounds)
                                    .map(|((pi, di), (lo, hi))| pi + di * 2.0 * (hi - lo + 1.0))
                                    .collect();
                                push(cand.boundary_between(&p, &far), &mut points);
                            }
                        } else {
                            push(p, &mut points);
                        }
                    }
                    None if biased && !anchors.is_empty() => {
                        let a = &anchors[rng.gen_range(0..anchors.len())];
                        let b = cand.boundary_between(a, &x);
                        push(b, &mut points);
                    }
                    None => {}
                }
                // Point sets like {0} can only ever yield one distinct atom.
                if attempts >= 50 * count.max(1) && !points.is_empty() && (points.len() as f64) < 1e-3 * attempts as f64 {
                    break;
                }
            }
            if points.is_empty() {
                return Err(SetError::Starvation { accepted: 0, attempts });
            }
            Ok(SampleReport { points, attempts })
        }
    }
}

/// Searches for a feasible point outside B_R; `Some` means the radius claim is wrong.
pub fn radius_counterexample(set: &SemiAlgebraicSet, radius: f64, count: usize, seed: u64) -> Option<Vec<f64>> {
    let base = set.clone();
    let probe = match base.bounding_box() {
        Some(_) => base,
        None => base.with_bounds(vec![(-2.0 * radius, 2.0 * radius); set.n()]).ok()?,
    };
    let report = sample_points(&probe, SampleStrategy::Sobol, count, seed).ok()?;
    report.points.into_iter().find(|p| p.iter().map(|v| v * v).sum::<f64>() > radius * radius * (1.0 + 1e-12))
}

/// Uniform random point in a box.
pub fn random_in_box<R: Rng>(bounds: &[(f64, f64)], rng: &mut R) -> Vec<f64> {
    bounds.iter().map(|(lo, hi)| if hi > lo { rng.gen_range(*lo..*hi) } else { *lo }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::{make_catalog_set, Catalog};

    #[test]
    fn grid_on_interval() {
        let x = make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap();
        let r = sample_points(&x, SampleStrategy::Grid, 101, 0).unwrap();
        assert_eq!(r.points.len(), 101);
        assert!(r.points.iter().any(|p| (p[0] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn circle_points_are_on_circle() {
        let x = make_catalog_set(&Catalog::Sphere { n: 2, radius: 1.0 }).unwrap();
        for strat in [SampleStrategy::Grid, SampleStrategy::Sobol, SampleStrategy::BoundaryBiased] {
            let r = sample_points(&x, strat, 200, 3).unwrap();
            assert!(r.points.len() >= 50);
            for p in &r.points {
                assert_eq!(x.violation(p).unwrap() <= FEASIBILITY_TOL, true);
            }
        }
    }

    #[test]
    fn single_point_set() {
        let h = Polynomial::var(1, 0);
        let x = SemiAlgebraicSet::new(1, vec![], vec![h]).unwrap().with_bounds(vec![(-1.0, 1.0)]).unwrap();
        let r = sample_points(&x, SampleStrategy::Sobol, 10, 0).unwrap();
        assert_eq!(r.points, vec![vec![0.0]]);
    }

    #[test]
    fn starvation_is_reported() {
        // Thin slab invisible to the sampler: x ≥ 0.5 and x ≤ 0.5 + 1e-9 inside [-1e6, 1e6].
        let g1 = Polynomial::from_terms(1, vec![(vec![1], 1.0), (vec![0], -0.5)]).unwrap();
        let g2 = Polynomial::from_terms(1, vec![(vec![1], -1.0), (vec![0], 0.5 + 1e-9)]).unwrap();
        let x = SemiAlgebraicSet::new(1, vec![g1, g2], vec![]).unwrap().with_bounds(vec![(-1e6, 1e6)]).unwrap();
        assert!(matches!(sample_points(&x, SampleStrategy::Sobol, 10, 0), Err(SetError::Starvation { .. })));
    }

    #[test]
    fn boundary_biased_hits_boundary() {
        let x = make_catalog_set(&Catalog::Ball { n: 2, radius: 1.0 }).unwrap();
        let r = sample_points(&x, SampleStrategy::BoundaryBiased, 400, 1).unwrap();
        let on_boundary = r.points.iter().filter(|p| x.inequalities()[0].eval_unchecked(p) < 1e-9).count();
        assert!(on_boundary > 100, "{on_boundary}");
    }
}
