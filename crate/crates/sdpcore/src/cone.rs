//! Cone blocks, symmetric packing and cone projections.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::SdpError;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One block of the product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Symmetric PSD matrix of the given order, stored packed.
    Psd(usize),
    /// Nonnegative orthant of the given length.
    Nonneg(usize),
    /// Unconstrained variables.
    Free(usize),
}

impl Block {
    /// Length of the block once scalarized.
    pub fn dim(&self) -> usize {
        match *self {
            Block::Psd(n) => n * (n + 1) / 2,
            Block::Nonneg(len) | Block::Free(len) => len,
        }
    }

    pub(crate) fn project_primal(&self, v: &mut [f64]) {
        match *self {
            Block::Psd(n) => project_psd_packed(v, n),
            Block::Nonneg(_) => v.iter_mut().for_each(|t| *t = t.max(0.0)),
            Block::Free(_) => {}
        }
    }

    /// Projection onto the dual cone. PSD and orthant blocks are self-dual;
    /// the dual of a free block is the origin.
    pub(crate) fn project_dual(&self, v: &mut [f64]) {
        match *self {
            Block::Free(_) => v.iter_mut().for_each(|t| *t = 0.0),
            _ => self.project_primal(v),
        }
    }
}

/// Position of entry (i, j), i <= j, inside a packed block of order n.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Packs the upper triangle row by row, scaling off-diagonal entries by √2.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out.push(if i == j { v } else { SQRT2 * v });
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let t = v[k] / SQRT2;
                m[(i, j)] = t;
                m[(j, i)] = t;
            }
            k += 1;
        }
    }
    m
}

/// Nearest PSD matrix in Frobenius norm.
pub fn psd_project(m: &DMatrix<f64>) -> Result<DMatrix<f64>, SdpError> {
    if !m.is_square() {
        return Err(SdpError::NotSymmetric(f64::INFINITY));
    }
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(SdpError::NotSymmetric(asym));
    }
    Ok(clamp_eigen(m.clone()))
}

/// Eigenvalues and orthonormal eigenvectors (as columns) of a symmetric matrix.
///
/// Backed by faer: nalgebra's `SymmetricEigen` can reconstruct a benign 6×6
/// matrix with only eight correct digits.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let f = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    match f.self_adjoint_eigen(faer::Side::Lower) {
        Ok(e) => {
            let (s, u) = (e.S(), e.U());
            (DVector::from_fn(n, |k, _| s[k]), DMatrix::from_fn(n, n, |i, k| u[(i, k)]))
        }
        // Only non-finite input gets here; keep the old behaviour for it.
        Err(_) => {
            let e = SymmetricEigen::new(m.clone());
            (e.eigenvalues, e.eigenvectors)
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix (0 for an empty one).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetric_eigen(m).0.min()
}

fn clamp_eigen(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return m;
    }
    let (values, vectors) = symmetric_eigen(&m);
    if values.iter().all(|&l| l >= 0.0) {
        return m;
    }
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in values.iter().enumerate() {
        if l > 0.0 {
            let v = vectors.column(k);
            out += l * v * v.transpose();
        }
    }
    symmetrize(&mut out);
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn project_psd_packed(v: &mut [f64], n: usize) {
    if n == 1 {
        v[0] = v[0].max(0.0);
        return;
    }
    let p = clamp_eigen(smat(v, n));
    v.copy_from_slice(&svec(&p));
}

/// Smallest eigenvalue of a packed block.
pub fn packed_min_eigenvalue(v: &[f64], n: usize) -> f64 {
    min_eigenvalue(&smat(v, n))
}
