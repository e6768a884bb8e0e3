//! Local constrained minimization of polynomials over X.
//!
//! Powell-Hestenes-Rockafellar augmented Lagrangian with a damped Newton
//! inner solver. Used for minimum estimates, support maxima and projections
//! onto X; every value it returns is an estimate from feasible points.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampling::{project_to_variety, random_in_box, sample_points, SampleStrategy};
use super::{SemiAlgebraicSet, SetError};
use crate::polycore::Polynomial;

/// A polynomial with its symbolic gradient and Hessian.
#[derive(Debug, Clone)]
struct Smooth {
    p: Polynomial,
    grad: Vec<Polynomial>,
    hess: Vec<Vec<Polynomial>>,
}

impl Smooth {
    fn new(p: &Polynomial) -> Self {
        let n = p.n();
        let grad: Vec<Polynomial> = (0..n).map(|i| p.derivative(i)).collect();
        let hess = grad.iter().map(|g| (0..n).map(|j| g.derivative(j)).collect()).collect();
        Smooth { p: p.clone(), grad, hess }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.p.eval_unchecked(x)
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(x.len(), self.grad.iter().map(|g| g.eval_unchecked(x)))
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| self.hess[i][j].eval_unchecked(x))
    }
}

#[derive(Debug, Clone)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub violation: f64,
}

/// min f subject to g_j ≥ 0, h_i = 0.
#[derive(Debug, Clone)]
pub struct LocalSolver {
    objective: Smooth,
    ineq: Vec<Smooth>,
    eq: Vec<Smooth>,
}

struct Multipliers {
    lam: Vec<f64>,
    mu: Vec<f64>,
    rho: f64,
}

impl LocalSolver {
    pub fn new(f: &Polynomial, set: &SemiAlgebraicSet) -> Self {
        LocalSolver {
            objective: Smooth::new(f),
            ineq: set.inequalities().iter().map(Smooth::new).collect(),
            eq: set.equalities().iter().map(Smooth::new).collect(),
        }
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let gi = self.ineq.iter().map(|g| (-g.value(x)).max(0.0));
        let hi = self.eq.iter().map(|h| h.value(x).abs());
        gi.chain(hi).fold(0.0, f64::max)
    }

    fn lagrangian(&self, x: &[f64], m: &Multipliers) -> f64 {
        let mut v = self.objective.value(x);
        for (g, &l) in self.ineq.iter().zip(&m.lam) {
            let t = (l - m.rho * g.value(x)).max(0.0);
            v += (t * t - l * l) / (2.0 * m.rho);
        }
        for (h, &u) in self.eq.iter().zip(&m.mu) {
            let hv = h.value(x);
            v += u * hv + 0.5 * m.rho * hv * hv;
        }
        v
    }

    fn derivatives(&self, x: &[f64], m: &Multipliers) -> (DVector<f64>, DMatrix<f64>) {
        let mut grad = self.objective.gradient(x);
        let mut hess = self.objective.hessian(x);
        for (g, &l) in self.ineq.iter().zip(&m.lam) {
            let t = l - m.rho * g.value(x);
            if t > 0.0 {
                let dg = g.gradient(x);
                grad -= &dg * t;
                hess += &dg * dg.transpose() * m.rho - g.hessian(x) * t;
            }
        }
        for (h, &u) in self.eq.iter().zip(&m.mu) {
            let w = u + m.rho * h.value(x);
            let dh = h.gradient(x);
            grad += &dh * w;
            hess += &dh * dh.transpose() * m.rho + h.hessian(x) * w;
        }
        (grad, hess)
    }

    fn inner(&self, x: &mut Vec<f64>, m: &Multipliers, iters: usize) {
        let n = x.len();
        let mut damping = 1e-8;
        for _ in 0..iters {
            let (g, h) = self.derivatives(x, m);
            let gnorm = g.norm();
            if gnorm <= 1e-13 * (1.0 + self.objective.value(x).abs()) {
                return;
            }
            let base = self.lagrangian(x, m);
            let mut stepped = false;
            for _ in 0..30 {
                let sys = &h + DMatrix::identity(n, n) * damping * (1.0 + h.diagonal().amax());
                let dir = match sys.cholesky() {
                    Some(c) => -c.solve(&g),
                    None => {
                        damping = (damping * 10.0).max(1e-6);
                        continue;
                    }
                };
                let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + d).collect();
                if trial.iter().all(|v| v.is_finite()) && self.lagrangian(&trial, m) < base {
                    *x = trial;
                    damping = (damping / 3.0).max(1e-12);
                    stepped = true;
                    break;
                }
                damping = (damping * 10.0).max(1e-6);
            }
            if !stepped {
                return;
            }
        }
    }

    /// Local minimizer from `start`.
    pub fn minimize(&self, start: &[f64]) -> LocalResult {
        let mut x = start.to_vec();
        let mut m = Multipliers { lam: vec![0.0; self.ineq.len()], mu: vec![0.0; self.eq.len()], rho: 10.0 };
        let constrained = !self.ineq.is_empty() || !self.eq.is_empty();
        let mut prev = self.violation(&x);
        for _ in 0..if constrained { 40 } else { 1 } {
            self.inner(&mut x, &m, 100);
            for (g, l) in self.ineq.iter().zip(m.lam.iter_mut()) {
                *l = (*l - m.rho * g.value(&x)).max(0.0);
            }
            for (h, u) in self.eq.iter().zip(m.mu.iter_mut()) {
                *u += m.rho * h.value(&x);
            }
            let viol = self.violation(&x);
            if viol <= 1e-14 && constrained {
                // One more pass with the updated multipliers sharpens stationarity.
                self.inner(&mut x, &m, 50);
                if self.violation(&x) <= 1e-12 {
                    break;
                }
            }
            if viol > 0.25 * prev {
                m.rho = (m.rho * 10.0).min(1e12);
            }
            prev = viol;
        }
        LocalResult { value: self.objective.value(&x), violation: self.violation(&x), x }
    }
}

/// Estimated minimum of f over X from feasible samples polished by local descent.
#[derive(Debug, Clone)]
pub struct MinEstimate {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub samples: usize,
    pub starts: usize,
}

/// Dense sampling plus multistart augmented-Lagrangian polish.
///
/// Only points with violation ≤ `feas_tol` are admitted, so the value is an
/// upper estimate of the true minimum up to that slack.
pub fn estimate_minimum(f: &Polynomial, set: &SemiAlgebraicSet, samples: usize, starts: usize, seed: u64) -> Result<MinEstimate, SetError> {
    if f.n() != set.n() {
        return Err(SetError::Dimension { expected: set.n(), found: f.n() });
    }
    let feas_tol = 1e-10;
    let mut cloud = sample_points(set, SampleStrategy::Sobol, samples, seed)?.points;
    if set.n() <= 2 {
        if let Ok(grid) = sample_points(set, SampleStrategy::Grid, samples, seed) {
            cloud.extend(grid.points);
        }
    }
    cloud.sort_by(|a, b| f.eval_unchecked(a).total_cmp(&f.eval_unchecked(b)));
    let solver = LocalSolver::new(f, set);
    let mut best = (f.eval_unchecked(&cloud[0]), cloud[0].clone());
    let bounds = set.bounding_box().ok_or(SetError::NoBoundingBox)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut begin: Vec<Vec<f64>> = cloud.iter().take(starts).cloned().collect();
    begin.extend((0..starts / 2).map(|_| random_in_box(&bounds, &mut rng)));
    for s in &begin {
        let r = solver.minimize(s);
        if r.violation <= feas_tol && r.value < best.0 {
            best = (r.value, r.x);
        }
    }
    Ok(MinEstimate { value: best.0, argmin: best.1, samples: cloud.len(), starts: begin.len() })
}

/// Estimated Euclidean distance from `x` to X with multistart projection.
pub fn distance_to_set(set: &SemiAlgebraicSet, x: &[f64], starts: usize, seed: u64) -> Result<(f64, Vec<f64>), SetError> {
    let n = set.n();
    if x.len() != n {
        return Err(SetError::Dimension { expected: n, found: x.len() });
    }
    // ‖z − x‖² as a polynomial in z.
    let mut obj = Polynomial::zero(n);
    for (i, xi) in x.iter().enumerate() {
        let d = &Polynomial::var(n, i) - &Polynomial::constant(n, *xi);
        obj = &obj + &(&d * &d);
    }
    let solver = LocalSolver::new(&obj, set);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut begin = vec![x.to_vec()];
    if let Some(bx) = set.bounding_box() {
        begin.extend((1..starts).map(|_| {
            let r = random_in_box(&bx, &mut rng);
            // Starts clustered near x keep the projection local.
            r.iter().zip(x).map(|(a, b)| b + 0.2 * (a - b)).collect()
        }));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &begin {
        let r = solver.minimize(s);
        let (value, z) = if r.violation <= 1e-12 {
            (r.value, r.x)
        } else {
            // Degenerate equalities (zero gradient on X) stall the penalty
            // method just short of feasibility; Gauss-Newton finishes the job.
            match project_to_variety(set.equalities(), &r.x) {
                Some(z) if set.violation_unchecked(&z) <= 1e-12 => (obj.eval_unchecked(&z), z),
                _ => continue,
            }
        };
        if best.as_ref().map_or(true, |b| value < b.0) {
            best = Some((value, z));
        }
    }
    best.map(|(v, z)| (v.max(0.0).sqrt(), z))
        .ok_or_else(|| SetError::Invalid("projection onto X did not reach a feasible point".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::{make_catalog_set, Catalog};

    fn quartic() -> Polynomial {
        Polynomial::from_terms(1, vec![(vec![4], 1.0), (vec![2], -1.0)]).unwrap()
    }

    #[test]
    fn quartic_minimum_on_interval() {
        let x = make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap();
        let est = estimate_minimum(&quartic(), &x, 200, 8, 0).unwrap();
        assert!((est.value + 0.25).abs() < 1e-12, "{}", est.value);
    }

    #[test]
    fn linear_on_circle() {
        let x = make_catalog_set(&Catalog::Sphere { n: 2, radius: 1.0 }).unwrap();
        let f = Polynomial::var(2, 0);
        let est = estimate_minimum(&f, &x, 200, 8, 1).unwrap();
        assert!((est.value + 1.0).abs() < 1e-10, "{}", est.value);
    }

    #[test]
    fn distance_to_circle() {
        let x = make_catalog_set(&Catalog::Sphere { n: 2, radius: 1.0 }).unwrap();
        let (d, z) = distance_to_set(&x, &[1.5, 0.0], 8, 0).unwrap();
        assert!((d - 0.5).abs() < 1e-9, "{d} {z:?}");
    }

    #[test]
    fn distance_to_interval() {
        let g1 = Polynomial::var(1, 0);
        let g2 = &Polynomial::constant(1, 1.0) - &Polynomial::var(1, 0);
        let x = SemiAlgebraicSet::new(1, vec![g1, g2], vec![]).unwrap().with_bounds(vec![(0.0, 1.0)]).unwrap();
        let (d, _) = distance_to_set(&x, &[-0.01], 8, 0).unwrap();
        assert!((d - 0.01).abs() < 1e-9, "{d}");
    }
}
