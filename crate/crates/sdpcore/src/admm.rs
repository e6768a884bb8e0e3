//! Alternating-direction augmented Lagrangian iteration on the dual problem.
//!
//! For `min cᵀx, Ax = b, x ∈ K` with dual `max bᵀy, Aᵀy + s = c, s ∈ K*` one sweep is
//!
//! ```text
//! y ← (AAᵀ)⁻¹ (μ(b − Ax) + A(c − s))
//! V ← c − Aᵀy − μx
//! s ← Π_{K*}(V),   x̃ ← Π_K(−V)/μ,   x ← x + γ(x̃ − x)
//! ```
//!
//! Residuals are measured at `x̃` and `s`, which lie inside their cones, so
//! only the linear residuals have to be driven to zero. `AAᵀ` is factored
//! once after row equilibration.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::cone::{packed_min_eigenvalue, symmetric_eigen, Block};
use crate::program::{ConicProgram, SparseMatrix};
use crate::SdpError;

/// Solver knobs.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative tolerance on primal residual, dual residual and gap.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial penalty weight (reciprocal of the augmented Lagrangian step μ).
    pub rho: f64,
    /// Residual balancing of the penalty.
    pub adaptive_rho: bool,
    /// Iterations without progress before the improving-ray test runs.
    pub stall_iters: usize,
    /// Ruiz equilibration of the columns (uniform within PSD blocks).
    pub scale_columns: bool,
    /// Step γ of the multiplier update, in (0, (1+√5)/2); 1 is plain ADMM.
    pub step: f64,
    /// Optional starting point.
    pub warm_start: Option<WarmStart>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-7, max_iters: 50_000, rho: 1.0, adaptive_rho: true, stall_iters: 500, scale_columns: true, step: 1.6, warm_start: None }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }
}

/// Initial iterate injected into the solver.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    MaxIters,
    InfeasibleCertificate,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::MaxIters => "max_iters",
            Status::InfeasibleCertificate => "infeasible",
        })
    }
}

/// Improving ray proving that one side has no feasible point.
#[derive(Debug, Clone)]
pub enum Infeasibility {
    /// `bᵀy > 0` and `−Aᵀy ∈ K*`: the primal constraints are inconsistent.
    Primal { ray: Vec<f64> },
    /// `x ∈ K`, `Ax = 0`, `cᵀx < 0`: the primal is unbounded below.
    Dual { ray: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    /// ‖Ax − b‖ / (1 + ‖b‖)
    pub primal: f64,
    /// ‖Aᵀy + s − c‖ / (1 + ‖c‖)
    pub dual: f64,
    /// |cᵀx − bᵀy| / (1 + |cᵀx| + |bᵀy|)
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// `cᵀx`
    pub primal_value: f64,
    /// `bᵀy`
    pub dual_value: f64,
    /// Flattened primal variable, inside `K`.
    pub x: Vec<f64>,
    /// Multipliers of the equality constraints.
    pub y: Vec<f64>,
    /// Dual slack, inside `K*`.
    pub s: Vec<f64>,
    pub status: Status,
    pub residuals: Residuals,
    pub iterations: usize,
    pub certificate: Option<Infeasibility>,
}

impl Solution {
    /// Smallest eigenvalue over all PSD blocks of `x` (0 when there are none).
    pub fn min_psd_eigenvalue(&self, p: &ConicProgram) -> f64 {
        p.blocks()
            .iter()
            .enumerate()
            .filter_map(|(i, b)| match b {
                Block::Psd(n) => Some(packed_min_eigenvalue(p.block_slice(&self.x, i), *n)),
                _ => None,
            })
            .fold(0.0_f64, f64::min)
    }
}

enum GramSolver {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Pinv(DMatrix<f64>),
}

impl GramSolver {
    fn new(g: DMatrix<f64>) -> Self {
        if let Some(ch) = Cholesky::new(g.clone()) {
            let d = ch.l_dirty().diagonal();
            let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
            if lo > 1e-7 * hi {
                return GramSolver::Chol(ch);
            }
        }
        let (values, vectors) = symmetric_eigen(&g);
        let top = values.amax();
        let mut inv = DMatrix::zeros(values.len(), values.len());
        for (k, &l) in values.iter().enumerate() {
            if l > 1e-12 * top.max(1.0) {
                let v = vectors.column(k);
                inv += (1.0 / l) * v * v.transpose();
            }
        }
        GramSolver::Pinv(inv)
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(rhs);
        let out = match self {
            GramSolver::Chol(ch) => ch.solve(&r),
            GramSolver::Pinv(inv) => inv * r,
        };
        out.as_slice().to_vec()
    }
}

/// Consecutive one-sided iterations before the penalty moves.
const RHO_WINDOW: usize = 100;
const MAX_RHO_UPDATES: usize = 30;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Problem<'a> {
    prog: &'a ConicProgram,
    a: SparseMatrix,
    b: Vec<f64>,
    c: &'a [f64],
    /// Row scaling applied to `A` and `b`; kept rows only.
    row_scale: Vec<f64>,
    kept: Vec<usize>,
    /// Internal variables are x̂ = x / d.
    col_scale: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn residuals(&self, x: &[f64], y_orig: &[f64], s: &[f64], aty: &[f64]) -> (Residuals, f64, f64) {
        let p = self.prog;
        let mut ax = vec![0.0; p.num_constraints()];
        p.constraints().mul_vec(x, &mut ax);
        let pr: Vec<f64> = ax.iter().zip(p.rhs()).map(|(u, v)| u - v).collect();
        let dr: Vec<f64> = aty.iter().zip(s).zip(self.c).map(|((u, v), w)| u + v - w).collect();
        let pv = dot(self.c, x);
        let dv = dot(p.rhs(), y_orig);
        let res = Residuals {
            primal: norm(&pr) / (1.0 + norm(p.rhs())),
            dual: norm(&dr) / (1.0 + norm(self.c)),
            gap: (pv - dv).abs() / (1.0 + pv.abs() + dv.abs()),
        };
        (res, pv, dv)
    }

    fn unscale_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.col_scale).map(|(v, d)| v * d).collect()
    }

    fn unscale_s(&self, s: &[f64]) -> Vec<f64> {
        s.iter().zip(&self.col_scale).map(|(v, d)| v / d).collect()
    }

    fn unscale_y(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.prog.num_constraints()];
        for (k, &i) in self.kept.iter().enumerate() {
            out[i] = y[k] * self.row_scale[k];
        }
        out
    }
}

/// Column factors from a few Ruiz sweeps on `A`; PSD blocks get one shared
/// factor so the cone is preserved.
fn column_scaling(prog: &ConicProgram) -> Vec<f64> {
    let a = prog.constraints();
    let (m, n) = (a.rows(), a.cols());
    let mut r = vec![1.0; m];
    let mut d = vec![1.0; n];
    for _ in 0..10 {
        let mut rn = vec![0.0_f64; m];
        for (i, rni) in rn.iter_mut().enumerate() {
            *rni = a.row(i).map(|(j, v)| (v * d[j] * r[i]).abs()).fold(0.0, f64::max);
        }
        for i in 0..m {
            if rn[i] > 0.0 {
                r[i] /= rn[i].sqrt();
            }
        }
        let cn: Vec<f64> = (0..n).map(|j| a.col(j).map(|(i, v)| (v * d[j] * r[i]).abs()).fold(0.0, f64::max)).collect();
        for (bi, blk) in prog.blocks().iter().enumerate() {
            let lo = prog.offset(bi);
            let hi = lo + blk.dim();
            match blk {
                Block::Psd(_) => {
                    let top = cn[lo..hi].iter().copied().fold(0.0, f64::max);
                    if top > 0.0 {
                        let f = 1.0 / top.sqrt();
                        d[lo..hi].iter_mut().for_each(|v| *v *= f);
                    }
                }
                _ => {
                    for j in lo..hi {
                        if cn[j] > 0.0 {
                            d[j] /= cn[j].sqrt();
                        }
                    }
                }
            }
        }
    }
    // Keep factors in a moderate range.
    d.iter().map(|v| v.clamp(1e-4, 1e4)).collect()
}

fn project_blocks(prog: &ConicProgram, v: &mut [f64], dual: bool) {
    for (i, blk) in prog.blocks().iter().enumerate() {
        let lo = prog.offset(i);
        let hi = lo + blk.dim();
        if dual {
            blk.project_dual(&mut v[lo..hi]);
        } else {
            blk.project_primal(&mut v[lo..hi]);
        }
    }
}

/// Distance of `v` from the cone (`dual` selects `K*`).
fn cone_distance(prog: &ConicProgram, v: &[f64], dual: bool) -> f64 {
    let mut p = v.to_vec();
    project_blocks(prog, &mut p, dual);
    norm(&v.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>())
}

fn check_primal_infeasible(prog: &ConicProgram, d: &[f64]) -> bool {
    let n = norm(d);
    if n == 0.0 {
        return false;
    }
    let d: Vec<f64> = d.iter().map(|v| v / n).collect();
    let by = dot(prog.rhs(), &d);
    if by <= 1e-9 {
        return false;
    }
    let mut aty = vec![0.0; prog.num_vars()];
    prog.constraints().mul_t_vec(&d, &mut aty);
    let neg: Vec<f64> = aty.iter().map(|v| -v).collect();
    cone_distance(prog, &neg, true) <= 1e-6 * by
}

fn check_dual_infeasible(prog: &ConicProgram, d: &[f64]) -> bool {
    let n = norm(d);
    if n == 0.0 {
        return false;
    }
    let d: Vec<f64> = d.iter().map(|v| v / n).collect();
    let cx = dot(prog.objective(), &d);
    if cx >= -1e-9 {
        return false;
    }
    let mut ax = vec![0.0; prog.num_constraints()];
    prog.constraints().mul_vec(&d, &mut ax);
    norm(&ax) <= 1e-6 * (-cx) && cone_distance(prog, &d, false) <= 1e-6 * (-cx)
}

/// Solves the program. Never fails on numerical grounds: non-convergence is
/// reported through [`Status::MaxIters`] with the best iterate seen.
pub fn solve(prog: &ConicProgram, opts: &SolverOptions) -> Result<Solution, SdpError> {
    if !(opts.tol > 0.0) || !(opts.rho > 0.0) {
        return Err(SdpError::Options("tol and rho must be positive".into()));
    }
    if !(opts.step > 0.0 && opts.step < 0.5 * (1.0 + 5f64.sqrt())) {
        return Err(SdpError::Options(format!("step {} outside (0, golden ratio)", opts.step)));
    }
    let n = prog.num_vars();
    let m = prog.num_constraints();
    let c = prog.objective();

    // Row equilibration; empty rows either certify infeasibility or are dropped.
    let norms = prog.constraints().row_norms();
    let mut kept = Vec::new();
    for i in 0..m {
        if norms[i] > 0.0 {
            kept.push(i);
        } else if prog.rhs()[i].abs() > opts.tol {
            let mut ray = vec![0.0; m];
            ray[i] = prog.rhs()[i].signum();
            return Ok(infeasible_solution(prog, Infeasibility::Primal { ray }));
        }
    }
    let col_scale = if opts.scale_columns { column_scaling(prog) } else { vec![1.0; n] };
    let trip: Vec<(usize, usize, f64)> = {
        let mut pos = vec![usize::MAX; m];
        for (k, &i) in kept.iter().enumerate() {
            pos[i] = k;
        }
        prog.constraints()
            .triplets()
            .into_iter()
            .filter(|t| pos[t.0] != usize::MAX)
            .map(|(i, j, v)| (pos[i], j, v))
            .collect()
    };
    let mut a = SparseMatrix::from_triplets(kept.len(), n, &trip)?;
    a.scale_cols(&col_scale);
    let row_scale: Vec<f64> = a.row_norms().iter().map(|v| 1.0 / v).collect();
    a.scale_rows(&row_scale);
    let cs: Vec<f64> = c.iter().zip(&col_scale).map(|(u, d)| u * d).collect();
    let b: Vec<f64> = kept.iter().zip(&row_scale).map(|(&i, s)| prog.rhs()[i] * s).collect();
    let mk = kept.len();
    let gram = GramSolver::new(a.gram());
    let pb = Problem { prog, a, b, c, row_scale, kept, col_scale };

    let mut x = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; mk];
    if let Some(ws) = &opts.warm_start {
        if ws.x.len() != n || ws.s.len() != n || ws.y.len() != m {
            return Err(SdpError::Dimension("warm start has wrong dimensions".into()));
        }
        for j in 0..n {
            x[j] = ws.x[j] / pb.col_scale[j];
            s[j] = ws.s[j] * pb.col_scale[j];
        }
        project_blocks(prog, &mut x, false);
        project_blocks(prog, &mut s, true);
        for (k, &i) in pb.kept.iter().enumerate() {
            y[k] = ws.y[i] / pb.row_scale[k];
        }
    }

    let mut mu = 1.0 / opts.rho;
    let (mut log_ratio, mut window) = (0.0_f64, 0usize);
    let mut rho_updates = 0usize;
    let mut ax = vec![0.0; mk];
    let mut acs = vec![0.0; mk];
    let mut aty = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    let mut best_merit = f64::INFINITY;
    let mut last_progress = 0usize;
    let mut step = opts.step;
    let mut last_switch = 0usize;
    let mut prev_y = y.clone();
    let mut prev_x = x.clone();
    let bnorm = norm(&pb.b);
    let cnorm = norm(&cs);

    for it in 1..=opts.max_iters {
        pb.a.mul_vec(&x, &mut ax);
        let cms: Vec<f64> = cs.iter().zip(&s).map(|(u, w)| u - w).collect();
        pb.a.mul_vec(&cms, &mut acs);
        let rhs: Vec<f64> = (0..mk).map(|i| mu * (pb.b[i] - ax[i]) + acs[i]).collect();
        prev_y.copy_from_slice(&y);
        y = gram.solve(&rhs);
        pb.a.mul_t_vec(&y, &mut aty);
        for j in 0..n {
            v[j] = cs[j] - aty[j] - mu * x[j];
        }
        s.copy_from_slice(&v);
        project_blocks(prog, &mut s, true);
        prev_x.copy_from_slice(&xt);
        for j in 0..n {
            xt[j] = (s[j] - v[j]) / mu;
            x[j] += step * (xt[j] - x[j]);
        }

        // Scaled residuals drive the penalty update.
        pb.a.mul_vec(&xt, &mut ax);
        let pinf = norm(&ax.iter().zip(&pb.b).map(|(u, w)| u - w).collect::<Vec<_>>()) / (1.0 + bnorm);
        let dinf = norm(&(0..n).map(|j| aty[j] + s[j] - cs[j]).collect::<Vec<_>>()) / (1.0 + cnorm);

        let y_orig = pb.unscale_y(&y);
        let x_u = pb.unscale_x(&xt);
        let s_u = pb.unscale_s(&s);
        let aty_u = pb.unscale_s(&aty);
        let (res, pv, dv) = pb.residuals(&x_u, &y_orig, &s_u, &aty_u);
        let merit = res.max();
        if merit < best_merit {
            if merit < 0.99 * best_merit {
                last_progress = it;
            }
            best_merit = merit;
            best = Some((pv, x_u.clone(), y_orig.clone(), s_u.clone(), vec![dv]));
        }
        if merit <= opts.tol {
            return Ok(Solution {
                primal_value: pv,
                dual_value: dv,
                x: x_u,
                y: y_orig,
                s: s_u,
                status: Status::Optimal,
                residuals: res,
                iterations: it,
                certificate: None,
            });
        }

        // Frequent penalty changes make the iteration oscillate, so μ moves
        // only on the average imbalance of a window, and a limited number of times.
        if opts.adaptive_rho && rho_updates < MAX_RHO_UPDATES && pinf > 0.0 && dinf > 0.0 {
            log_ratio += (pinf / dinf).ln();
            window += 1;
            if window == RHO_WINDOW {
                let mean = log_ratio / RHO_WINDOW as f64;
                if mean.abs() > 5f64.ln() {
                    mu = (mu * (0.5 * mean).exp().clamp(0.1, 10.0)).clamp(1e-6, 1e6);
                    rho_updates += 1;
                }
                (log_ratio, window) = (0.0, 0);
            }
        }

        // Over-relaxation helps on some programs and makes others cycle, so a
        // stalled run alternates between the configured step and plain ADMM.
        if it - last_progress.max(last_switch) >= 4 * opts.stall_iters && opts.step != 1.0 {
            step = if step == 1.0 { opts.step } else { 1.0 };
            last_switch = it;
            mu = 1.0 / opts.rho;
            (log_ratio, window, rho_updates) = (0.0, 0, 0);
        }

        if it - last_progress >= opts.stall_iters && it % 50 == 0 {
            let dy: Vec<f64> = pb.unscale_y(&y.iter().zip(&prev_y).map(|(a, b)| a - b).collect::<Vec<_>>());
            if check_primal_infeasible(prog, &dy) {
                return Ok(infeasible_solution(prog, Infeasibility::Primal { ray: dy }));
            }
            let dx: Vec<f64> = pb.unscale_x(&xt.iter().zip(&prev_x).map(|(a, b)| a - b).collect::<Vec<_>>());
            if check_dual_infeasible(prog, &dx) {
                return Ok(infeasible_solution(prog, Infeasibility::Dual { ray: dx }));
            }
        }
    }

    let (pv, x, y, s, dv) = best.expect("at least one iteration");
    let mut aty = vec![0.0; n];
    prog.constraints().mul_t_vec(&y, &mut aty);
    let (res, _, _) = pb.residuals(&x, &y, &s, &aty);
    Ok(Solution {
        primal_value: pv,
        dual_value: dv[0],
        x,
        y,
        s,
        status: Status::MaxIters,
        residuals: res,
        iterations: opts.max_iters,
        certificate: None,
    })
}

fn infeasible_solution(prog: &ConicProgram, cert: Infeasibility) -> Solution {
    Solution {
        primal_value: f64::NAN,
        dual_value: f64::NAN,
        x: vec![0.0; prog.num_vars()],
        y: vec![0.0; prog.num_constraints()],
        s: vec![0.0; prog.num_vars()],
        status: Status::InfeasibleCertificate,
        residuals: Residuals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN },
        iterations: 0,
        certificate: Some(cert),
    }
}
