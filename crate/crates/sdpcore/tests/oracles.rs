use sdpcore::{solve, Block, ConicProgram, Infeasibility, SolverOptions, SparseMatrix, Status};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// maximize c s.t. [1 − c] ⪰ 0, written as min −c, c + X = 1, X ⪰ 0.
fn scalar_bound() -> ConicProgram {
    let a = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
    ConicProgram::new(vec![Block::Free(1), Block::Psd(1)], vec![-1.0, 0.0], a, vec![1.0]).unwrap()
}

/// x − c = σ₀ + σ₁(1 − x²) with σ₀ = [1 x] G [1 x]ᵀ, maximize c.
fn interval_sos() -> ConicProgram {
    // columns: c | G00 G01·√2 G11 | s1
    let t = [
        (0, 0, 1.0),
        (0, 1, 1.0),
        (0, 4, 1.0),
        (1, 2, SQRT2),
        (2, 3, 1.0),
        (2, 4, -1.0),
    ];
    let a = SparseMatrix::from_triplets(3, 5, &t).unwrap();
    ConicProgram::new(
        vec![Block::Free(1), Block::Psd(2), Block::Psd(1)],
        vec![-1.0, 0.0, 0.0, 0.0, 0.0],
        a,
        vec![0.0, 1.0, 0.0],
    )
    .unwrap()
}

/// min y₂ s.t. y₀ = 1, M₁(y) ⪰ 0, 1·y₀ − y₂ ≥ 0 (as a 1×1 PSD block).
fn moment_square() -> ConicProgram {
    // columns: y0 y1 y2 | X00 X01√2 X11 | Z
    let t = [
        (0, 0, 1.0),
        (1, 3, 1.0),
        (1, 0, -1.0),
        (2, 4, 1.0),
        (2, 1, -SQRT2),
        (3, 5, 1.0),
        (3, 2, -1.0),
        (4, 6, 1.0),
        (4, 0, -1.0),
        (4, 2, 1.0),
    ];
    let a = SparseMatrix::from_triplets(5, 7, &t).unwrap();
    ConicProgram::new(
        vec![Block::Free(3), Block::Psd(2), Block::Psd(1)],
        vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        a,
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
    )
    .unwrap()
}

#[test]
fn scalar_bound_optimum() {
    let sol = solve(&scalar_bound(), &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((-sol.primal_value - 1.0).abs() < 1e-6, "{}", sol.primal_value);
}

#[test]
fn interval_sos_optimum() {
    let p = interval_sos();
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.x[0] + 1.0).abs() < 1e-6, "c = {}", sol.x[0]);
    let g = p.block_matrix(&sol.x, 1);
    // ½(1+x)² has Gram ½[[1,1],[1,1]].
    assert!((g[(0, 0)] - 0.5).abs() < 1e-5);
    assert!((g[(0, 1)] - 0.5).abs() < 1e-5);
    assert!((sol.x[4] - 0.5).abs() < 1e-5);
}

#[test]
fn moment_square_optimum() {
    let p = moment_square();
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(sol.primal_value.abs() < 1e-6, "{}", sol.primal_value);
    assert!(sol.min_psd_eigenvalue(&p) >= -1e-7);
}

#[test]
fn optimal_status_respects_contract() {
    for p in [scalar_bound(), interval_sos(), moment_square()] {
        let opts = SolverOptions::default();
        let sol = solve(&p, &opts).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(sol.residuals.primal <= opts.tol);
        assert!(sol.residuals.dual <= opts.tol);
        assert!((sol.primal_value - sol.dual_value).abs() <= opts.tol * (1.0 + sol.primal_value.abs()) * 3.0);
        assert!(sol.primal_value >= sol.dual_value - 10.0 * opts.tol);
    }
}

#[test]
fn detects_inconsistent_constraints() {
    // x ≥ 0 and x = −1.
    let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
    let p = ConicProgram::new(vec![Block::Nonneg(1)], vec![1.0], a, vec![-1.0]).unwrap();
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, Status::InfeasibleCertificate);
    assert!(matches!(sol.certificate, Some(Infeasibility::Primal { .. })));
}

#[test]
fn detects_unbounded_objective() {
    // min −x₁ with x₁ − x₂ = 0, x ≥ 0.
    let a = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]).unwrap();
    let p = ConicProgram::new(vec![Block::Nonneg(2)], vec![-1.0, 0.0], a, vec![0.0]).unwrap();
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, Status::InfeasibleCertificate);
    assert!(matches!(sol.certificate, Some(Infeasibility::Dual { .. })));
}

#[test]
fn max_iters_returns_best_iterate() {
    let opts = SolverOptions { max_iters: 3, ..Default::default() };
    let sol = solve(&interval_sos(), &opts).unwrap();
    assert_eq!(sol.status, Status::MaxIters);
    assert!(sol.residuals.max().is_finite());
}

#[test]
fn redundant_rows_are_tolerated() {
    // x₁ + x₂ = 1 twice, minimize x₁ over the orthant.
    let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
    let p = ConicProgram::new(vec![Block::Nonneg(2)], vec![1.0, 0.0], a, vec![1.0, 1.0]).unwrap();
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(sol.primal_value.abs() < 1e-6);
}
