//! Conic programs in standard form: minimize `c'x` subject to `Ax = b`, `x ∈ K`.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::cone::{smat, Block};
use crate::SdpError;

/// Row-compressed sparse matrix with a column-compressed mirror for transposed products.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    cvals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SdpError> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(SdpError::Dimension(format!("triplet ({r},{c}) outside {rows}x{cols}")));
            }
            if !v.is_finite() {
                return Err(SdpError::Dimension(format!("non-finite entry at ({r},{c})")));
            }
            t.push((r, c, v));
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);

        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = merged.iter().map(|e| e.1).collect();
        let vals = merged.iter().map(|e| e.2).collect();

        let mut col_ptr = vec![0; cols + 1];
        for &(_, c, _) in &merged {
            col_ptr[c + 1] += 1;
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut fill = col_ptr.clone();
        let mut row_idx = vec![0; merged.len()];
        let mut cvals = vec![0.0; merged.len()];
        for &(r, c, v) in &merged {
            row_idx[fill[c]] = r;
            cvals[fill[c]] = v;
            fill[c] += 1;
        }
        Ok(SparseMatrix { rows, cols, row_ptr, col_idx, vals, col_ptr, row_idx, cvals })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzeros of row `i` as (column, value).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// Nonzeros of column `j` as (row, value).
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[span.clone()].iter().copied().zip(self.cvals[span].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `out = Aᵀ y`
    pub fn mul_t_vec(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.col(j).map(|(i, v)| v * y[i]).sum();
        }
    }

    /// Dense `A Aᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.rows, self.rows);
        for j in 0..self.cols {
            let entries: Vec<(usize, f64)> = self.col(j).collect();
            for &(a, va) in &entries {
                for &(b, vb) in &entries {
                    g[(a, b)] += va * vb;
                }
            }
        }
        g
    }

    pub(crate) fn scale_rows(&mut self, d: &[f64]) {
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                self.vals[k] *= d[i];
            }
        }
        for k in 0..self.row_idx.len() {
            self.cvals[k] *= d[self.row_idx[k]];
        }
    }

    pub(crate) fn scale_cols(&mut self, d: &[f64]) {
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                self.vals[k] *= d[self.col_idx[k]];
            }
        }
        for j in 0..self.cols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                self.cvals[k] *= d[j];
            }
        }
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).map(|(_, v)| v * v).sum::<f64>().sqrt()).collect()
    }
}

/// `minimize cᵀx  s.t.  A x = b,  x ∈ K₁ × … × K_p`.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    c: Vec<f64>,
    a: SparseMatrix,
    b: Vec<f64>,
}

impl ConicProgram {
    pub fn new(blocks: Vec<Block>, c: Vec<f64>, a: SparseMatrix, b: Vec<f64>) -> Result<Self, SdpError> {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut total = 0;
        for blk in &blocks {
            offsets.push(total);
            total += blk.dim();
        }
        offsets.push(total);
        if c.len() != total {
            return Err(SdpError::Dimension(format!("objective has length {}, blocks need {total}", c.len())));
        }
        if a.cols() != total {
            return Err(SdpError::Dimension(format!("constraint matrix has {} columns, blocks need {total}", a.cols())));
        }
        if a.rows() != b.len() {
            return Err(SdpError::Dimension(format!("{} constraint rows but rhs of length {}", a.rows(), b.len())));
        }
        if c.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(SdpError::Dimension("non-finite objective or rhs".into()));
        }
        Ok(ConicProgram { blocks, offsets, c, a, b })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Start of block `i` in the flattened variable.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn num_vars(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn constraints(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    /// Slice of block `i` inside a flattened vector.
    pub fn block_slice<'a>(&self, v: &'a [f64], i: usize) -> &'a [f64] {
        &v[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Block `i` of a flattened vector as a dense symmetric matrix (PSD blocks) or column.
    pub fn block_matrix(&self, v: &[f64], i: usize) -> DMatrix<f64> {
        let s = self.block_slice(v, i);
        match self.blocks[i] {
            Block::Psd(n) => smat(s, n),
            _ => DMatrix::from_column_slice(s.len(), 1, s),
        }
    }

    /// Sparse text dump.
    ///
    /// ```text
    /// sdpcore-program 1
    /// blocks <p>
    /// psd <order> | nonneg <len> | free <len>     (p lines)
    /// rows <m> cols <N>
    /// c <nnz>      then nnz lines "col value"
    /// a <nnz>      then nnz lines "row col value"
    /// b <nnz>      then nnz lines "row value"
    /// ```
    /// Indices are zero based; PSD blocks are packed row by row over the upper
    /// triangle with off-diagonal entries scaled by √2.
    pub fn to_sparse_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sdpcore-program 1");
        let _ = writeln!(s, "blocks {}", self.blocks.len());
        for blk in &self.blocks {
            let _ = match blk {
                Block::Psd(n) => writeln!(s, "psd {n}"),
                Block::Nonneg(n) => writeln!(s, "nonneg {n}"),
                Block::Free(n) => writeln!(s, "free {n}"),
            };
        }
        let _ = writeln!(s, "rows {} cols {}", self.num_constraints(), self.num_vars());
        let cnz: Vec<_> = self.c.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        let _ = writeln!(s, "c {}", cnz.len());
        for (j, v) in cnz {
            let _ = writeln!(s, "{j} {v:e}");
        }
        let trip = self.a.triplets();
        let _ = writeln!(s, "a {}", trip.len());
        for (i, j, v) in trip {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
        let bnz: Vec<_> = self.b.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        let _ = writeln!(s, "b {}", bnz.len());
        for (i, v) in bnz {
            let _ = writeln!(s, "{i} {v:e}");
        }
        s
    }

    /// Parses the format written by [`ConicProgram::to_sparse_text`].
    pub fn from_sparse_text(text: &str) -> Result<Self, SdpError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<String>), SdpError> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_string).collect()))
                .ok_or_else(|| SdpError::Parse(format!("unexpected end of input, expected {what}")))
        };
        fn num<T: std::str::FromStr>(line: usize, tok: Option<&String>) -> Result<T, SdpError> {
            tok.and_then(|t| t.parse().ok())
                .ok_or_else(|| SdpError::Parse(format!("line {line}: malformed number")))
        }
        fn keyword(line: usize, toks: &[String], want: &str) -> Result<(), SdpError> {
            if toks.first().map(String::as_str) == Some(want) {
                Ok(())
            } else {
                Err(SdpError::Parse(format!("line {line}: expected '{want}'")))
            }
        }

        let (l, toks) = next("header")?;
        keyword(l, &toks, "sdpcore-program")?;
        let (l, toks) = next("blocks")?;
        keyword(l, &toks, "blocks")?;
        let p: usize = num(l, toks.get(1))?;
        let mut blocks = Vec::with_capacity(p);
        for _ in 0..p {
            let (l, toks) = next("block")?;
            let len: usize = num(l, toks.get(1))?;
            blocks.push(match toks[0].as_str() {
                "psd" => Block::Psd(len),
                "nonneg" => Block::Nonneg(len),
                "free" => Block::Free(len),
                other => return Err(SdpError::Parse(format!("line {l}: unknown block kind '{other}'"))),
            });
        }
        let (l, toks) = next("rows")?;
        keyword(l, &toks, "rows")?;
        let m: usize = num(l, toks.get(1))?;
        let nvars: usize = num(l, toks.get(3))?;

        let (l, toks) = next("c")?;
        keyword(l, &toks, "c")?;
        let cnt: usize = num(l, toks.get(1))?;
        let mut c = vec![0.0; nvars];
        for _ in 0..cnt {
            let (l, toks) = next("c entry")?;
            let j: usize = num(l, toks.first())?;
            if j >= nvars {
                return Err(SdpError::Parse(format!("line {l}: column {j} out of range")));
            }
            c[j] = num(l, toks.get(1))?;
        }
        let (l, toks) = next("a")?;
        keyword(l, &toks, "a")?;
        let cnt: usize = num(l, toks.get(1))?;
        let mut trip = Vec::with_capacity(cnt);
        for _ in 0..cnt {
            let (l, toks) = next("a entry")?;
            trip.push((num(l, toks.first())?, num(l, toks.get(1))?, num(l, toks.get(2))?));
        }
        let (l, toks) = next("b")?;
        keyword(l, &toks, "b")?;
        let cnt: usize = num(l, toks.get(1))?;
        let mut b = vec![0.0; m];
        for _ in 0..cnt {
            let (l, toks) = next("b entry")?;
            let i: usize = num(l, toks.first())?;
            if i >= m {
                return Err(SdpError::Parse(format!("line {l}: row {i} out of range")));
            }
            b[i] = num(l, toks.get(1))?;
        }
        let a = SparseMatrix::from_triplets(m, nvars, &trip)?;
        ConicProgram::new(blocks, c, a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ConicProgram {
        let a = SparseMatrix::from_triplets(2, 4, &[(0, 0, 1.0), (0, 3, -1.0), (1, 1, 2.5), (1, 2, 1.0)]).unwrap();
        ConicProgram::new(vec![Block::Psd(2), Block::Free(1)], vec![1.0, 0.0, 1.0, 0.5], a, vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn sparse_products() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (0, 0, 1.0)]).unwrap();
        let mut out = vec![0.0; 2];
        a.mul_vec(&[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out, vec![4.0, 3.0]);
        let mut out = vec![0.0; 3];
        a.mul_t_vec(&[1.0, 2.0], &mut out);
        assert_eq!(out, vec![2.0, 6.0, 2.0]);
        let g = a.gram();
        assert_eq!(g[(0, 0)], 8.0);
        assert_eq!(g[(1, 1)], 9.0);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn dimension_checks() {
        let a = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(ConicProgram::new(vec![Block::Free(3)], vec![0.0; 3], a.clone(), vec![1.0]).is_err());
        assert!(ConicProgram::new(vec![Block::Free(2)], vec![0.0; 2], a, vec![1.0, 2.0]).is_err());
        assert!(SparseMatrix::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = tiny();
        let text = p.to_sparse_text();
        let q = ConicProgram::from_sparse_text(&text).unwrap();
        assert_eq!(q.blocks(), p.blocks());
        assert_eq!(q.objective(), p.objective());
        assert_eq!(q.rhs(), p.rhs());
        assert_eq!(q.constraints(), p.constraints());
    }

    #[test]
    fn text_parse_errors_name_the_line() {
        let err = ConicProgram::from_sparse_text("sdpcore-program 1\nblocks 1\ncone 3\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
