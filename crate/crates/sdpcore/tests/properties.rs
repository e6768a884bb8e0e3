use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use sdpcore::{psd_project, smat, solve, svec, Block, ConicProgram, SolverOptions, SparseMatrix, Status};

fn symmetric(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(-5.0..5.0f64, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    })
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// A random LP `min cᵀx, Ax = b, x ≥ 0` with strictly feasible primal and dual.
fn feasible_lp() -> impl Strategy<Value = ConicProgram> {
    (1..4usize, 2..7usize).prop_flat_map(|(m, extra)| {
        let n = m + extra;
        (
            prop::collection::vec(-1.0..1.0f64, m * n),
            prop::collection::vec(0.1..2.0f64, n),
            prop::collection::vec(-1.0..1.0f64, m),
            prop::collection::vec(0.1..2.0f64, n),
        )
            .prop_map(move |(a, x0, y0, s0)| {
                let mut trip = Vec::new();
                for i in 0..m {
                    trip.push((i, i, 1.0));
                    for j in 0..n {
                        trip.push((i, j, a[i * n + j]));
                    }
                }
                let a = SparseMatrix::from_triplets(m, n, &trip).unwrap();
                let mut b = vec![0.0; m];
                a.mul_vec(&x0, &mut b);
                let mut c = vec![0.0; n];
                a.mul_t_vec(&y0, &mut c);
                c.iter_mut().zip(&s0).for_each(|(c, s)| *c += s);
                ConicProgram::new(vec![Block::Nonneg(n)], c, a, b).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn svec_is_an_isometry(m in symmetric(6)) {
        let v = svec(&m);
        prop_assert!((smat(&v, m.nrows()) - &m).amax() < 1e-12);
        let packed: f64 = v.iter().map(|t| t * t).sum();
        prop_assert!((packed - m.norm_squared()).abs() < 1e-9 * (1.0 + packed));
    }

    #[test]
    fn projection_is_the_moreau_split(m in symmetric(6)) {
        let p = psd_project(&m).unwrap();
        let rest = &m - &p;
        prop_assert!(min_eig(&p) > -1e-10);
        prop_assert!(min_eig(&(-&rest)) > -1e-10);
        prop_assert!(p.dot(&rest).abs() < 1e-9 * (1.0 + m.norm_squared()));
        prop_assert!((psd_project(&p).unwrap() - &p).amax() < 1e-10);
    }

    #[test]
    fn projection_never_moves_a_psd_matrix(m in symmetric(5)) {
        let g = &m * m.transpose();
        prop_assert!((psd_project(&g).unwrap() - &g).amax() < 1e-9 * (1.0 + g.amax()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sparse_text_round_trips(p in feasible_lp()) {
        let q = ConicProgram::from_sparse_text(&p.to_sparse_text()).unwrap();
        prop_assert_eq!(q.blocks(), p.blocks());
        prop_assert_eq!(q.objective(), p.objective());
        prop_assert_eq!(q.rhs(), p.rhs());
        prop_assert_eq!(q.constraints().triplets(), p.constraints().triplets());
    }

    #[test]
    fn feasible_lps_close_the_gap(p in feasible_lp()) {
        // Degenerate vertices can need ~60k iterations whatever the penalty;
        // give the budget the hierarchy runs with.
        let sol = solve(&p, &SolverOptions { max_iters: 200_000, ..SolverOptions::with_tol(1e-9) }).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        prop_assert!(sol.x.iter().all(|&v| v >= 0.0) && sol.s.iter().all(|&v| v >= 0.0));
        let scale = 1.0 + sol.primal_value.abs();
        prop_assert!((sol.primal_value - sol.dual_value).abs() < 1e-6 * scale, "{} vs {}", sol.primal_value, sol.dual_value);
        // Complementary slackness.
        let comp: f64 = sol.x.iter().zip(&sol.s).map(|(x, s)| x * s).sum();
        prop_assert!(comp.abs() < 1e-6 * scale, "{comp}");
    }
}
