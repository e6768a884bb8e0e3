use serde::{Deserialize, Serialize};

use super::catalog::{make_catalog_set, Catalog, SimpleFactor, SimpleKind, SimpleSetProduct};
use super::set::{HintSource, LojasiewiczHint, SemiAlgebraicSet};
use super::SetError;
use crate::polycore::{Polynomial, PolynomialTerms};

/// JSON form of a set: explicit constraint lists or a catalog shorthand.
///
/// ```json
/// {"n": 1, "inequalities": [[[[0], 1.0], [[2], -1.0]]], "radius": 1}
/// {"catalog": "ball", "n": 2, "R": 1}
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Scale parameter: ball/sphere radius, cube half-width.
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Simplex size.
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<SimpleFactor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<Vec<PolynomialTerms>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equalities: Option<Vec<PolynomialTerms>>,
    /// Archimedean radius; appends R² − ‖x‖² ≥ 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lojasiewicz: Option<LojasiewiczHint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
}

fn polys(list: &Option<Vec<PolynomialTerms>>, n: usize, what: &str) -> Result<Vec<Polynomial>, SetError> {
    list.iter()
        .flatten()
        .enumerate()
        .map(|(k, p)| {
            p.clone()
                .into_polynomial(n)
                .map_err(|e| SetError::Invalid(format!("{what} {k}: {e}")))
        })
        .collect()
}

impl SetDescriptor {
    fn need_n(&self) -> Result<usize, SetError> {
        self.n.ok_or_else(|| SetError::Invalid("missing field 'n'".into()))
    }

    fn catalog(&self) -> Result<Catalog, SetError> {
        let scale = || self.scale.ok_or_else(|| SetError::Invalid("catalog entry needs 'R'".into()));
        match self.catalog.as_deref() {
            None => {
                let n = self.need_n()?;
                Ok(Catalog::Custom {
                    n,
                    inequalities: polys(&self.inequalities, n, "inequality")?,
                    equalities: polys(&self.equalities, n, "equality")?,
                })
            }
            Some("ball") => Ok(Catalog::Ball { n: self.need_n()?, radius: scale()? }),
            Some("sphere") => Ok(Catalog::Sphere { n: self.need_n()?, radius: scale()? }),
            Some("hypercube") => Ok(Catalog::Hypercube { n: self.need_n()?, half_width: scale()? }),
            Some("simplex") => Ok(Catalog::Simplex {
                n: self.need_n()?,
                size: self.size.or(self.scale).unwrap_or(1.0),
            }),
            Some("polytope") => match (&self.matrix, &self.b) {
                (Some(a), Some(b)) => Ok(Catalog::Polytope { a: a.clone(), b: b.clone() }),
                _ => Err(SetError::Invalid("polytope needs 'A' and 'b'".into())),
            },
            Some("box_product") => {
                let factors = self.factors.clone().ok_or_else(|| SetError::Invalid("box_product needs 'factors'".into()))?;
                Ok(Catalog::BoxProduct(SimpleSetProduct::new(factors)?))
            }
            Some(other) => Err(SetError::Invalid(format!("unknown catalog entry '{other}'"))),
        }
    }

    pub fn to_set(&self) -> Result<SemiAlgebraicSet, SetError> {
        let mut set = make_catalog_set(&self.catalog()?)?;
        if self.catalog.is_some() && (self.inequalities.is_some() || self.equalities.is_some()) {
            return Err(SetError::Invalid("catalog shorthand cannot be mixed with explicit constraints".into()));
        }
        if let Some(n) = self.n {
            if n != set.n() {
                return Err(SetError::Dimension { expected: set.n(), found: n });
            }
        }
        if let Some(b) = &self.bounds {
            set = set.with_bounds(b.clone())?;
        }
        if let Some(r) = self.radius {
            set = set.archimedean_augment(r)?;
        }
        if let Some(h) = self.lojasiewicz {
            set = set.with_lojasiewicz(Some(LojasiewiczHint::new(h.exponent, h.constant, h.source)?));
        }
        Ok(set)
    }

    /// Descriptor for an explicit set (catalog metadata is dropped).
    pub fn from_set(set: &SemiAlgebraicSet) -> Self {
        let ball = set.ball_constraint();
        SetDescriptor {
            n: Some(set.n()),
            inequalities: Some(set.proper_inequalities().iter().map(PolynomialTerms::from).collect()),
            equalities: Some(set.equalities().iter().map(PolynomialTerms::from).collect()),
            radius: ball.and(set.radius()),
            lojasiewicz: set.lojasiewicz(),
            bounds: set.bounding_box(),
            ..Default::default()
        }
    }
}

/// Shorthand used by the kernel tools.
pub fn simple_factor(kind: &str, n: usize, scale: f64) -> Result<SimpleFactor, SetError> {
    let kind = match kind {
        "ball" => SimpleKind::Ball,
        "simplex" => SimpleKind::Simplex,
        "hypercube" => SimpleKind::Hypercube,
        other => return Err(SetError::Invalid(format!("'{other}' is not a simple set"))),
    };
    SimpleFactor::new(kind, n, scale)
}

/// Hint with a user source, validated.
pub fn user_hint(exponent: f64, constant: Option<f64>) -> Result<LojasiewiczHint, SetError> {
    LojasiewiczHint::new(exponent, constant, HintSource::User)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<SemiAlgebraicSet, SetError> {
        let d: SetDescriptor = serde_json::from_str(s).map_err(|e| SetError::Invalid(e.to_string()))?;
        d.to_set()
    }

    #[test]
    fn explicit_interval() {
        let x = parse(r#"{"n": 1, "inequalities": [[[[0], 1.0], [[2], -1.0]]], "radius": 1}"#).unwrap();
        assert_eq!(x.inequalities().len(), 1);
        assert_eq!(x.radius(), Some(1.0));
    }

    #[test]
    fn catalog_shorthand() {
        let x = parse(r#"{"catalog": "sphere", "n": 2, "R": 1}"#).unwrap();
        assert_eq!(x.equalities().len(), 1);
        assert_eq!(x.inequalities().len(), 1);
    }

    #[test]
    fn bad_exponent_length() {
        let err = parse(r#"{"n": 2, "inequalities": [[[[1], 1.0]]]}"#).unwrap_err();
        assert!(err.to_string().contains("expected 2"), "{err}");
    }

    #[test]
    fn round_trip_through_descriptor() {
        let x = parse(r#"{"n": 1, "inequalities": [[[[1], 1.0]]], "radius": 2}"#).unwrap();
        let back = SetDescriptor::from_set(&x).to_set().unwrap();
        assert_eq!(back.inequalities(), x.inequalities());
        assert_eq!(back.radius(), Some(2.0));
    }
}
