use nalgebra::SymmetricEigen;
use proptest::prelude::*;

use momentsos::momentkit::{sequence_from_measure, DiscreteMeasure};
use momentsos::polycore::{enumerate_monomials, Polynomial};

const N: usize = 2;

fn poly(deg: usize) -> impl Strategy<Value = Polynomial> {
    let len = enumerate_monomials(N, deg).len();
    prop::collection::vec(-2.0..2.0f64, len).prop_map(move |c| {
        let mut p = Polynomial::zero(N);
        for (a, v) in enumerate_monomials(N, deg).iter().zip(c) {
            p.add_term(a.clone(), v);
        }
        p
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, N)
}

fn measure() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((point(), 0.05..1.0f64), 1..6).prop_map(|atoms| {
        let (xs, ws): (Vec<_>, Vec<f64>) = atoms.into_iter().unzip();
        let total: f64 = ws.iter().sum();
        DiscreteMeasure::new(xs, ws.iter().map(|w| w / total).collect()).unwrap()
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn evaluation_is_a_ring_map(p in poly(3), q in poly(2), x in point()) {
        let (pv, qv) = (p.eval(&x).unwrap(), q.eval(&x).unwrap());
        prop_assert!(close((&p + &q).eval(&x).unwrap(), pv + qv));
        prop_assert!(close((&p - &q).eval(&x).unwrap(), pv - qv));
        prop_assert!(close((&p * &q).eval(&x).unwrap(), pv * qv));
        prop_assert!(close(p.pow(2).eval(&x).unwrap(), pv * pv));
    }

    #[test]
    fn algebra_laws(p in poly(2), q in poly(2), s in poly(1)) {
        prop_assert!((&(&p * &q) - &(&q * &p)).l1_norm() < 1e-12);
        let lhs = &p * &(&q + &s);
        let rhs = &(&p * &q) + &(&p * &s);
        prop_assert!((&lhs - &rhs).l1_norm() < 1e-10);
        prop_assert!((&p - &p).is_zero());
        prop_assert!((&p * &q).degree() <= p.degree() + q.degree());
    }

    #[test]
    fn derivative_matches_finite_difference(p in poly(4), x in point()) {
        let h = 1e-6;
        for i in 0..N {
            let mut lo = x.clone();
            let mut hi = x.clone();
            lo[i] -= h;
            hi[i] += h;
            let fd = (p.eval(&hi).unwrap() - p.eval(&lo).unwrap()) / (2.0 * h);
            prop_assert!((p.derivative(i).eval(&x).unwrap() - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn riesz_functional_integrates(mu in measure(), p in poly(2), q in poly(2)) {
        let y = sequence_from_measure(&mu, 4);
        let f = &p * &q;
        let want: f64 = mu.atoms().iter().zip(mu.weights()).map(|(x, w)| w * f.eval(x).unwrap()).sum();
        prop_assert!(close(y.riesz_apply(&f).unwrap(), want));
    }

    #[test]
    fn measure_moment_matrices_are_psd(mu in measure()) {
        let y = sequence_from_measure(&mu, 4);
        let m = y.moment_matrix(2).unwrap();
        prop_assert!(SymmetricEigen::new(m.clone()).eigenvalues.min() > -1e-10 * (1.0 + m.amax()));
        // Atoms lie in the box, so 2 − |x|² ≥ 0 on the support.
        let g = Polynomial::ball(N, 2f64.sqrt());
        let l = y.localizing_matrix(&g, 1).unwrap();
        prop_assert!(SymmetricEigen::new(l).eigenvalues.min() > -1e-10);
    }
}
