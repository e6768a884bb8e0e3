//! Multivariate polynomials over a fixed graded monomial order.

mod monomial;
mod polynomial;

pub use monomial::{basis_size, enumerate_monomials, monomials_of_degree, MonomialBasis, MultiIndex};
pub use polynomial::{invert_checked, LinearDirection, Polynomial, PolynomialTerms};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("term {term}: exponent vector has length {found}, expected {expected}")]
    TermDimension { term: usize, expected: usize, found: usize },
    #[error("term {0}: coefficient is not finite")]
    NonFinite(usize),
    #[error("matrix is singular or too ill-conditioned to invert")]
    Singular,
    #[error("substituted polynomials live in different rings")]
    Mixed,
    #[error("cannot parse monomial '{0}'")]
    Parse(String),
}
