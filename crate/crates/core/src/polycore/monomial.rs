use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use super::PolyError;

/// Exponent vector α ∈ ℕⁿ.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// e_i in ℕⁿ.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    /// |α|
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Concatenation (α, β) ∈ ℕ^{n+m}.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// x^α at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&e, &t)| t.powi(e as i32)).product()
    }

    /// Position of α in the graded order, independent of any truncation.
    pub fn graded_rank(&self) -> usize {
        let n = self.0.len();
        let d = self.degree() as usize;
        let mut rank = if d == 0 { 0 } else { basis_size(n, d - 1) };
        let mut rem = d;
        for (i, &a) in self.0.iter().enumerate().take(n.saturating_sub(1)) {
            let tail = n - i - 1;
            // Monomials sharing the prefix but with a larger exponent here come first.
            for e in a as usize + 1..=rem {
                rank += basis_size(tail - 1, rem - e);
            }
            rem -= a as usize;
        }
        rank
    }

    /// Parses "x1^2*x2" style strings; "1" is the zero index.
    pub fn parse(s: &str, n: usize) -> Result<Self, PolyError> {
        let mut v = vec![0u32; n];
        let s = s.trim();
        if s == "1" {
            return Ok(MultiIndex(v));
        }
        for factor in s.split('*') {
            let (var, pow) = match factor.split_once('^') {
                Some((a, b)) => (a, b.parse::<u32>().map_err(|_| PolyError::Parse(s.to_string()))?),
                None => (factor, 1),
            };
            let idx: usize = var
                .trim()
                .strip_prefix('x')
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| PolyError::Parse(s.to_string()))?;
            if idx == 0 || idx > n {
                return Err(PolyError::Parse(s.to_string()));
            }
            v[idx - 1] += pow;
        }
        Ok(MultiIndex(v))
    }
}

impl Ord for MultiIndex {
    /// Graded order: lower total degree first, then larger leading exponents first
    /// (so x₁ precedes x₂ and x₁² precedes x₁x₂).
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// All monomials of degree ≤ r in graded order, with a reverse lookup.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    n: usize,
    order: usize,
    monomials: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
}

/// binom(n + r, n)
pub fn basis_size(n: usize, r: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (r as u128 + i) / i;
    }
    acc as usize
}

fn push_degree(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() == n - 1 {
        prefix.push(d);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for e in (0..=d).rev() {
        prefix.push(e);
        push_degree(n, d - e, prefix, out);
        prefix.pop();
    }
}

/// Monomials of exact degree d in graded order.
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    push_degree(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Builds the truncated monomial basis ℕⁿ_r.
pub fn enumerate_monomials(n: usize, r: usize) -> MonomialBasis {
    assert!(n >= 1, "dimension must be positive");
    let mut monomials = Vec::with_capacity(basis_size(n, r));
    for d in 0..=r as u32 {
        monomials.extend(monomials_of_degree(n, d));
    }
    let index = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    MonomialBasis { n, order: r, monomials, index }
}

impl MonomialBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    pub fn monomial_at(&self, i: usize) -> &MultiIndex {
        &self.monomials[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.monomials.iter()
    }

    /// v_r(x) = (x^α)_{|α| ≤ r}.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.monomials.iter().map(|m| m.eval(x)).collect()
    }

    /// Number of monomials of degree ≤ d (a prefix of this basis).
    pub fn prefix_len(&self, d: usize) -> usize {
        basis_size(self.n, d.min(self.order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_variables_degree_two() {
        let b = enumerate_monomials(2, 2);
        let names: Vec<String> = b.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]);
    }

    #[test]
    fn constant_basis() {
        let b = enumerate_monomials(1, 0);
        assert_eq!(b.len(), 1);
        assert!(b.monomial_at(0).is_zero());
    }

    #[test]
    fn size_matches_brute_force() {
        // Brute force over the box {0..4}³.
        let mut count = 0;
        for a in 0..=4 {
            for b in 0..=4 {
                for c in 0..=4 {
                    if a + b + c <= 4 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 35);
        assert_eq!(enumerate_monomials(3, 4).len(), 35);
        assert_eq!(basis_size(3, 4), 35);
    }

    #[test]
    fn order_is_sorted() {
        let b = enumerate_monomials(3, 5);
        for w in b.iter().collect::<Vec<_>>().windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn rank_matches_enumeration() {
        for n in 1..4 {
            let b = enumerate_monomials(n, 5);
            for (i, m) in b.iter().enumerate() {
                assert_eq!(m.graded_rank(), i);
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        let b = enumerate_monomials(3, 3);
        for m in b.iter() {
            assert_eq!(&MultiIndex::parse(&m.to_string(), 3).unwrap(), m);
        }
        assert!(MultiIndex::parse("x4", 3).is_err());
        assert!(MultiIndex::parse("y1", 3).is_err());
    }
}
