use serde::{Deserialize, Serialize};

use super::SetError;
use crate::polycore::Polynomial;

/// Where a Łojasiewicz exponent comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintSource {
    Polytope,
    StronglyConvex,
    PolyakLojasiewicz,
    Cqc,
    Sphere,
    User,
}

/// Exponent Ł ∈ (0, 1] and optional constant c in d(x, X) ≤ c·violation(x)^Ł.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczHint {
    pub exponent: f64,
    #[serde(default)]
    pub constant: Option<f64>,
    #[serde(default = "user_source")]
    pub source: HintSource,
}

fn user_source() -> HintSource {
    HintSource::User
}

impl LojasiewiczHint {
    pub fn new(exponent: f64, constant: Option<f64>, source: HintSource) -> Result<Self, SetError> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(SetError::Invalid(format!("Lojasiewicz exponent {exponent} outside (0, 1]")));
        }
        if let Some(c) = constant {
            if !(c > 0.0) {
                return Err(SetError::Invalid(format!("Lojasiewicz constant {c} must be positive")));
            }
        }
        Ok(LojasiewiczHint { exponent, constant, source })
    }
}

/// Catalog family a set was built from; drives rate predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetFamily {
    Ball,
    Simplex,
    Hypercube,
    Sphere,
    Polytope,
    Product,
    Custom,
}

/// X = {x ∈ ℝⁿ : g_j(x) ≥ 0, h_i(x) = 0}.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiAlgebraicSet {
    n: usize,
    inequalities: Vec<Polynomial>,
    equalities: Vec<Polynomial>,
    radius: Option<f64>,
    lojasiewicz: Option<LojasiewiczHint>,
    family: SetFamily,
    bounds: Option<Vec<(f64, f64)>>,
    half_degree: usize,
}

impl SemiAlgebraicSet {
    pub fn new(n: usize, inequalities: Vec<Polynomial>, equalities: Vec<Polynomial>) -> Result<Self, SetError> {
        if n == 0 {
            return Err(SetError::Invalid("dimension must be positive".into()));
        }
        for (k, p) in inequalities.iter().chain(&equalities).enumerate() {
            if p.n() != n {
                return Err(SetError::Invalid(format!("constraint {k} lives in {} variables, set has {n}", p.n())));
            }
        }
        let half_degree = inequalities.iter().chain(&equalities).map(Polynomial::half_degree).max().unwrap_or(0);
        Ok(SemiAlgebraicSet {
            n,
            inequalities,
            equalities,
            radius: None,
            lojasiewicz: None,
            family: SetFamily::Custom,
            bounds: None,
            half_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// g_j ≥ 0, including the ball constraint when a radius is recorded.
    pub fn inequalities(&self) -> &[Polynomial] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Polynomial] {
        &self.equalities
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn lojasiewicz(&self) -> Option<LojasiewiczHint> {
        self.lojasiewicz
    }

    pub fn family(&self) -> SetFamily {
        self.family
    }

    /// d = max ⌈g_j⌉, ⌈h_i⌉.
    pub fn max_half_degree(&self) -> usize {
        self.half_degree
    }

    /// The ball polynomial R² − ‖x‖² when a radius is recorded.
    pub fn ball_constraint(&self) -> Option<Polynomial> {
        self.radius.map(|r| Polynomial::ball(self.n, r))
    }

    /// Inequalities other than the recorded ball constraint.
    pub fn proper_inequalities(&self) -> Vec<Polynomial> {
        let ball = self.ball_constraint();
        let mut out = Vec::new();
        let mut skipped = false;
        for g in &self.inequalities {
            if !skipped && Some(g) == ball.as_ref() {
                skipped = true;
                continue;
            }
            out.push(g.clone());
        }
        out
    }

    pub fn has_equalities(&self) -> bool {
        !self.equalities.is_empty()
    }

    pub fn with_lojasiewicz(mut self, hint: Option<LojasiewiczHint>) -> Self {
        self.lojasiewicz = hint;
        self
    }

    pub fn with_family(mut self, family: SetFamily) -> Self {
        self.family = family;
        self
    }

    /// Coordinate box known to contain X, used by samplers.
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self, SetError> {
        if bounds.len() != self.n || bounds.iter().any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(SetError::Invalid("bounding box must have one finite interval per coordinate".into()));
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    /// Box known to contain X: explicit bounds, else the radius cube.
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        if let Some(b) = &self.bounds {
            return Some(b.clone());
        }
        self.radius.map(|r| vec![(-r, r); self.n])
    }

    /// max{0, −g_j(x), |h_i(x)|}
    pub fn violation(&self, x: &[f64]) -> Result<f64, SetError> {
        if x.len() != self.n {
            return Err(SetError::Dimension { expected: self.n, found: x.len() });
        }
        Ok(self.violation_unchecked(x))
    }

    pub fn violation_unchecked(&self, x: &[f64]) -> f64 {
        let mut v = 0.0_f64;
        for g in &self.inequalities {
            v = v.max(-g.eval_unchecked(x));
        }
        for h in &self.equalities {
            v = v.max(h.eval_unchecked(x).abs());
        }
        v
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n && self.violation_unchecked(x) <= tol
    }

    /// Appends R² − ‖x‖² ≥ 0 (unless already present) and records R.
    ///
    /// The caller asserts X ⊆ B_R; [`super::radius_counterexample`] can spot-check it.
    pub fn archimedean_augment(&self, radius: f64) -> Result<Self, SetError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(SetError::Invalid(format!("radius {radius} must be positive")));
        }
        let ball = Polynomial::ball(self.n, radius);
        let mut out = self.clone();
        if !out.inequalities.contains(&ball) {
            out.inequalities.push(ball);
        }
        out.radius = Some(radius);
        out.half_degree = out.half_degree.max(1);
        Ok(out)
    }

    pub(crate) fn set_radius_unchecked(&mut self, radius: f64) {
        self.radius = Some(radius);
    }
}
