use super::{membership_violation, preordering_products, Certificate, MomentError, TruncatedSequence};
use crate::polycore::{enumerate_monomials, MultiIndex, Polynomial};
use crate::semialg::SemiAlgebraicSet;

/// y^φ over ℝ^{n+m} together with the lifting data.
#[derive(Debug, Clone)]
pub struct LiftedSequence {
    pub sequence: TruncatedSequence,
    /// t = ⌊r / (2d)⌋
    pub t: usize,
    /// Number of lifted inequalities m.
    pub lifted: usize,
}

fn lift_order(y: &TruncatedSequence, set: &SemiAlgebraicSet) -> Result<usize, MomentError> {
    let r = y.order() / 2;
    let d = set.max_half_degree().max(1);
    let t = r / (2 * d);
    if t == 0 {
        return Err(MomentError::LevelTooLow { level: r, needed: 2 * d });
    }
    Ok(t)
}

/// y^φ_{(α,β)} = ℓ_y(x^α g(x)^β) for |α| + |β| ≤ 2t.
///
/// The lifted generators are the inequalities of X other than the recorded
/// ball constraint.
pub fn lift_sequence(y: &TruncatedSequence, set: &SemiAlgebraicSet) -> Result<LiftedSequence, MomentError> {
    if y.n() != set.n() {
        return Err(MomentError::Dimension { expected: set.n(), found: y.n() });
    }
    let t = lift_order(y, set)?;
    let n = set.n();
    let gens = set.proper_inequalities();
    let m = gens.len();
    let top = 2 * t;
    // gpow[j][e] = g_j^e
    let gpow: Vec<Vec<Polynomial>> = gens
        .iter()
        .map(|g| {
            let mut v = vec![Polynomial::constant(n, 1.0)];
            for e in 1..=top {
                let next = &v[e - 1] * g;
                v.push(next);
            }
            v
        })
        .collect();
    let basis = enumerate_monomials(n + m, top);
    let mut values = Vec::with_capacity(basis.len());
    for ab in basis.iter() {
        let (alpha, beta) = ab.exps().split_at(n);
        let mut p = Polynomial::monomial(MultiIndex::new(alpha.to_vec()), 1.0);
        for (j, &e) in beta.iter().enumerate() {
            if e > 0 {
                p = &p * &gpow[j][e as usize];
            }
        }
        values.push(y.riesz_apply(&p)?);
    }
    Ok(LiftedSequence { sequence: TruncatedSequence::new(n + m, top, values)?, t, lifted: m })
}

/// φ(X) ⊆ B_R × Δ^m_K described in the lifted variables (x, u).
#[derive(Debug, Clone)]
pub struct LiftedSet {
    pub set: SemiAlgebraicSet,
    /// Simplex size K = max(1, R)^{2d} Σ‖g_j‖₁.
    pub simplex_size: f64,
    /// d of the original set.
    pub half_degree: usize,
}

/// Inequalities R² − ‖x‖², u_j, K − Σu_j and equalities h_i(x), u_j − g_j(x).
pub fn lifted_set(set: &SemiAlgebraicSet) -> Result<LiftedSet, MomentError> {
    let radius = set
        .radius()
        .ok_or_else(|| MomentError::Invalid("lifting needs an Archimedean radius".into()))?;
    let n = set.n();
    let gens = set.proper_inequalities();
    let m = gens.len();
    let total = n + m;
    let d = set.max_half_degree().max(1);
    let k: f64 = radius.max(1.0).powi(2 * d as i32) * gens.iter().map(Polynomial::l1_norm).sum::<f64>();
    let mut ineq = vec![Polynomial::ball(n, radius).embed(total, 0)];
    let mut budget = Polynomial::constant(total, k);
    for j in 0..m {
        let u = Polynomial::var(total, n + j);
        budget = &budget - &u;
        ineq.push(u);
    }
    ineq.push(budget);
    let mut eq: Vec<Polynomial> = set.equalities().iter().map(|h| h.embed(total, 0)).collect();
    for (j, g) in gens.iter().enumerate() {
        eq.push(&Polynomial::var(total, n + j) - &g.embed(total, 0));
    }
    Ok(LiftedSet { set: SemiAlgebraicSet::new(total, ineq, eq)?, simplex_size: k, half_degree: d })
}

/// Worst violation of the level-t constraints of φ(X) with scalar equality terms at y^φ.
pub fn lifted_violation(lifted: &LiftedSequence, target: &LiftedSet) -> Result<f64, MomentError> {
    if lifted.t < 2 * target.half_degree {
        return Err(MomentError::LevelTooLow { level: lifted.t, needed: 2 * target.half_degree });
    }
    let specs = preordering_products(&target.set, lifted.t, Certificate::R);
    membership_violation(&lifted.sequence, &specs)
}
