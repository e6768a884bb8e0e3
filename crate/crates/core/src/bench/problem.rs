use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::polycore::{Polynomial, PolynomialTerms};
use crate::semialg::{SemiAlgebraicSet, SetDescriptor, SimpleFactor, SimpleKind, SimpleSetProduct};

/// On-disk problem: objective terms plus a set descriptor.
///
/// ```json
/// {"name": "linear on the interval",
///  "objective": [[[1], 1.0]],
///  "set": {"catalog": "ball", "n": 1, "R": 1}}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub objective: PolynomialTerms,
    pub set: SetDescriptor,
    /// Expected convergence exponent used when fitting rates.
    #[serde(default)]
    pub predicted_exponent: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ProblemMeta {
    pub name: String,
    pub description: Option<String>,
    pub predicted_exponent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Polynomial,
    pub set: SemiAlgebraicSet,
    pub descriptor: SetDescriptor,
    pub meta: ProblemMeta,
}

impl Problem {
    /// The set as a product of simple factors, when it is one.
    pub fn simple_product(&self) -> Option<SimpleSetProduct> {
        let d = &self.descriptor;
        if d.inequalities.is_some() || d.equalities.is_some() || d.radius.is_some() {
            return None;
        }
        let kind = match d.catalog.as_deref()? {
            "box_product" => return SimpleSetProduct::new(d.factors.clone()?).ok(),
            "ball" => SimpleKind::Ball,
            "simplex" => SimpleKind::Simplex,
            "hypercube" => SimpleKind::Hypercube,
            _ => return None,
        };
        let scale = match kind {
            SimpleKind::Simplex => d.size.or(d.scale).unwrap_or(1.0),
            _ => d.scale?,
        };
        SimpleFactor::new(kind, d.n?, scale).ok().and_then(|f| SimpleSetProduct::new(vec![f]).ok())
    }
}

/// Parses problem JSON; syntax and schema errors carry line and column.
pub fn parse_problem_str(text: &str) -> Result<Problem, BenchError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| BenchError::Schema {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let set = file.set.to_set().map_err(|e| BenchError::Validation(format!("set: {e}")))?;
    let objective = file
        .objective
        .clone()
        .into_polynomial(set.n())
        .map_err(|e| BenchError::Validation(format!("objective: {e}")))?;
    let meta = ProblemMeta {
        name: file.name.clone().unwrap_or_else(|| "problem".into()),
        description: file.description.clone(),
        predicted_exponent: file.predicted_exponent.or_else(|| set.lojasiewicz().map(|h| h.exponent)),
    };
    Ok(Problem { objective, set, descriptor: file.set, meta })
}

pub fn parse_problem(path: &Path) -> Result<Problem, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    parse_problem_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_ball() {
        let p = parse_problem_str(r#"{"objective": [[[1], 1.0]], "set": {"catalog": "ball", "n": 1, "R": 1}}"#).unwrap();
        assert_eq!(p.objective, Polynomial::var(1, 0));
        assert_eq!(p.set.inequalities(), &[Polynomial::ball(1, 1.0)]);
        assert!(p.simple_product().is_some());
    }

    #[test]
    fn sphere_shorthand() {
        let p = parse_problem_str(r#"{"objective": [[[1, 0], 1.0]], "set": {"catalog": "sphere", "n": 2, "R": 1}}"#).unwrap();
        assert_eq!(p.set.equalities().len(), 1);
        assert_eq!(p.set.inequalities().len(), 1);
        assert!(p.simple_product().is_none());
    }

    #[test]
    fn bad_exponent_length() {
        let err = parse_problem_str(r#"{"objective": [[[1], 1.0]], "set": {"catalog": "ball", "n": 2, "R": 1}}"#).unwrap_err();
        assert!(matches!(err, BenchError::Validation(ref m) if m.contains("objective") && m.contains("expected 2")), "{err}");
    }

    #[test]
    fn schema_errors_have_lines() {
        let err = parse_problem_str("{\n  \"objective\": [],\n  \"sett\": {}\n}").unwrap_err();
        match err {
            BenchError::Schema { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
