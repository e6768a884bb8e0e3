use nalgebra::DMatrix;
use serde::Serialize;

use super::DistError;
use crate::momentkit::TruncatedSequence;
use crate::polycore::{basis_size, enumerate_monomials};
use crate::semialg::{sample_points, SampleStrategy, SemiAlgebraicSet};

/// Atoms accepted into a cone sample must satisfy this.
pub const ATOM_TOL: f64 = 1e-9;

/// Finite-atom inner approximation conv{v_k(x_j)} of M_k(X).
#[derive(Debug, Clone, Serialize)]
pub struct MomentConeSample {
    pub k: usize,
    pub n: usize,
    pub atoms: Vec<Vec<f64>>,
    /// v_k(x_j) in the graded monomial basis.
    pub vectors: Vec<Vec<f64>>,
    pub strategy: String,
    pub requested: usize,
    pub attempts: usize,
}

/// Samples atoms of X and records their moment vectors up to order k.
pub fn sample_moment_cone(
    set: &SemiAlgebraicSet,
    k: usize,
    strategy: SampleStrategy,
    count: usize,
    seed: u64,
) -> Result<MomentConeSample, DistError> {
    let need = basis_size(set.n(), k);
    if count < need {
        return Err(DistError::Invalid(format!("count {count} is below s(n, k) = {need}")));
    }
    let report = sample_points(set, strategy, count, seed)?;
    let basis = enumerate_monomials(set.n(), k);
    let atoms: Vec<Vec<f64>> = report.points.into_iter().filter(|x| set.violation_unchecked(x) <= ATOM_TOL).collect();
    if atoms.is_empty() {
        return Err(DistError::InsufficientSamples { found: 0, needed: 1 });
    }
    let vectors = atoms.iter().map(|x| basis.eval(x)).collect();
    Ok(MomentConeSample {
        k,
        n: set.n(),
        atoms,
        vectors,
        strategy: format!("{strategy:?}").to_lowercase(),
        requested: count,
        attempts: report.attempts,
    })
}

impl MomentConeSample {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Union of two samples of the same order.
    pub fn merged(&self, other: &MomentConeSample) -> Result<MomentConeSample, DistError> {
        if self.k != other.k || self.n != other.n {
            return Err(DistError::Invalid("samples have different orders or dimensions".into()));
        }
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().cloned());
        out.vectors.extend(other.vectors.iter().cloned());
        out.requested += other.requested;
        out.attempts += other.attempts;
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionResult {
    pub input: Vec<f64>,
    /// Σ w_j v_k(x_j)
    pub projected: Vec<f64>,
    pub distance: f64,
    pub weights: Vec<f64>,
    /// ‖w − Π_Δ(w − ∇/L)‖·L at the returned weights.
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl ProjectionResult {
    /// Indices of atoms carrying weight above `tol`.
    pub fn active(&self, tol: f64) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, w)| **w > tol).map(|(i, _)| i).collect()
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

const KKT_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 200_000;

/// min ‖y − Σ w_j v_j‖² over the simplex, by FISTA with adaptive restart.
pub fn project_to_moment_set(y: &TruncatedSequence, sample: &MomentConeSample) -> Result<ProjectionResult, DistError> {
    if y.n() != sample.n || y.order() != sample.k {
        return Err(DistError::Invalid(format!(
            "sequence (n={}, order {}) does not match the sample (n={}, k={})",
            y.n(),
            y.order(),
            sample.n,
            sample.k
        )));
    }
    let target = y.values();
    let s = target.len();
    let m = sample.len();
    let v = DMatrix::from_fn(s, m, |i, j| sample.vectors[j][i]);
    let lip = sdpcore::symmetric_eigen(&(&v * v.transpose())).0.max().max(1e-300);
    let grad = |w: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let u: Vec<f64> = (0..s).map(|i| (0..m).map(|j| v[(i, j)] * w[j]).sum::<f64>() - target[i]).collect();
        let g = (0..m).map(|j| (0..s).map(|i| v[(i, j)] * u[i]).sum()).collect();
        (u, g)
    };
    let kkt = |w: &[f64], g: &[f64]| -> f64 {
        let step: Vec<f64> = w.iter().zip(g).map(|(a, b)| a - b / lip).collect();
        let p = project_simplex(&step);
        lip * w.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let mut w = vec![1.0 / m as f64; m];
    let mut z = w.clone();
    let mut t = 1.0_f64;
    let mut prev_obj = f64::INFINITY;
    let mut iters = 0;
    for it in 1..=MAX_ITERS {
        iters = it;
        let (_, gz) = grad(&z);
        let step: Vec<f64> = z.iter().zip(&gz).map(|(a, b)| a - b / lip).collect();
        let w_next = project_simplex(&step);
        let (u, g) = grad(&w_next);
        let obj: f64 = u.iter().map(|x| x * x).sum();
        if obj > prev_obj {
            // Restart momentum when the objective goes up.
            t = 1.0;
            z = w.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = w_next.iter().zip(&w).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        t = t_next;
        w = w_next;
        prev_obj = obj;
        if kkt(&w, &g) <= KKT_TOL || obj.sqrt() <= KKT_TOL {
            break;
        }
    }
    let (u, g) = grad(&w);
    let projected: Vec<f64> = u.iter().zip(target).map(|(a, b)| a + b).collect();
    Ok(ProjectionResult {
        input: target.to_vec(),
        projected,
        distance: u.iter().map(|x| x * x).sum::<f64>().sqrt(),
        kkt_residual: kkt(&w, &g),
        weights: w,
        iterations: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::Polynomial;
    use crate::semialg::{make_catalog_set, Catalog};

    fn origin() -> SemiAlgebraicSet {
        SemiAlgebraicSet::new(1, vec![], vec![Polynomial::var(1, 0)]).unwrap().with_bounds(vec![(-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn point_set_has_one_vector() {
        let s = sample_moment_cone(&origin(), 2, SampleStrategy::Grid, 5, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.vectors[0], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn interval_grid_vectors() {
        let x = make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap();
        let s = sample_moment_cone(&x, 2, SampleStrategy::Grid, 101, 0).unwrap();
        assert_eq!(s.len(), 101);
        for (a, v) in s.atoms.iter().zip(&s.vectors) {
            assert_eq!(v, &vec![1.0, a[0], a[0] * a[0]]);
        }
        assert!(sample_moment_cone(&x, 2, SampleStrategy::Grid, 2, 0).is_err());
    }

    #[test]
    fn circle_atoms_on_circle() {
        let x = make_catalog_set(&Catalog::Sphere { n: 2, radius: 1.0 }).unwrap();
        let s = sample_moment_cone(&x, 2, SampleStrategy::Sobol, 64, 3).unwrap();
        assert!(s.atoms.iter().all(|a| x.violation_unchecked(a) <= ATOM_TOL));
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 2.0, -1.0]);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let q = project_simplex(&[0.3, 0.3, 0.4]);
        assert!(q.iter().zip([0.3, 0.3, 0.4]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn projections() {
        let x = make_catalog_set(&Catalog::Ball { n: 1, radius: 1.0 }).unwrap();
        let s = sample_moment_cone(&x, 2, SampleStrategy::Grid, 101, 0).unwrap();
        let inside = TruncatedSequence::new(1, 2, vec![1.0, 0.0, 0.5]).unwrap();
        assert!(project_to_moment_set(&inside, &s).unwrap().distance < 1e-7);
        let out = TruncatedSequence::new(1, 2, vec![1.0, 0.0, 1.2]).unwrap();
        let r = project_to_moment_set(&out, &s).unwrap();
        assert!(r.distance >= 0.2 - 1e-9 && r.distance < 0.2 + 1e-6, "{}", r.distance);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let o = sample_moment_cone(&origin(), 2, SampleStrategy::Grid, 5, 0).unwrap();
        let forced = TruncatedSequence::new(1, 2, vec![1.0, 0.0, 0.0]).unwrap();
        assert!(project_to_moment_set(&forced, &o).unwrap().distance < 1e-12);
    }
}
