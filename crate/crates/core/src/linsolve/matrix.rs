use std::collections::BTreeSet;
use std::io::{self, Write};

use crate::error::{Error, Result};

/// Row-major 2x2 block.
pub type Block = [[f64; 2]; 2];

pub const ZERO_BLOCK: Block = [[0.0; 2]; 2];
pub const IDENTITY_BLOCK: Block = [[1.0, 0.0], [0.0, 1.0]];

pub fn block_inverse(b: &Block) -> Option<Block> {
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let scale = b.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if det == 0.0 || !det.is_finite() || det.abs() <= 1e-300 * scale * scale {
        return None;
    }
    let inv = 1.0 / det;
    Some([[b[1][1] * inv, -b[0][1] * inv], [-b[1][0] * inv, b[0][0] * inv]])
}

/// Block-CSR matrix of 2x2 blocks with a structurally symmetric pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    blocks: Vec<Block>,
}

impl BlockSparseMatrix {
    /// Allocates zero blocks for every `(i, j)` in `pattern` and its transpose,
    /// plus the diagonal.
    pub fn from_pattern(n: usize, pattern: &[Vec<usize>]) -> Self {
        assert_eq!(pattern.len(), n, "pattern must have one entry per block row");
        let mut rows: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        for (i, cols) in pattern.iter().enumerate() {
            for &j in cols {
                assert!(j < n, "column {j} out of range for {n} block rows");
                rows[i].insert(j);
                rows[j].insert(i);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in &rows {
            col_idx.extend(r.iter().copied());
            row_ptr.push(col_idx.len());
        }
        let blocks = vec![ZERO_BLOCK; col_idx.len()];
        BlockSparseMatrix {
            n,
            row_ptr,
            col_idx,
            blocks,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern(n, &vec![Vec::new(); n]);
        for i in 0..n {
            m.add(i, i, &IDENTITY_BLOCK);
        }
        m
    }

    /// Block dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Scalar dimension, `2 n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn nnz_blocks(&self) -> usize {
        self.col_idx.len()
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> Block {
        self.slot(i, j).map_or(ZERO_BLOCK, |k| self.blocks[k])
    }

    /// Adds `b` into block `(i, j)`; panics if the slot is not in the pattern.
    pub fn add(&mut self, i: usize, j: usize, b: &Block) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("block ({i}, {j}) is not in the sparsity pattern"));
        for r in 0..2 {
            for c in 0..2 {
                self.blocks[k][r][c] += b[r][c];
            }
        }
    }

    pub fn set(&mut self, i: usize, j: usize, b: &Block) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("block ({i}, {j}) is not in the sparsity pattern"));
        self.blocks[k] = *b;
    }

    /// Zeroes block row `i` while keeping its pattern.
    pub fn clear_row(&mut self, i: usize) {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            self.blocks[k] = ZERO_BLOCK;
        }
    }

    /// Iterates `(column, block)` over stored entries of block row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &Block)> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(&self.blocks[range])
    }

    pub fn diagonal(&self, i: usize) -> Block {
        self.get(i, i)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        for i in 0..self.n {
            let (mut a, mut b) = (0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let blk = &self.blocks[k];
                let (x0, x1) = (x[2 * j], x[2 * j + 1]);
                a += blk[0][0] * x0 + blk[0][1] * x1;
                b += blk[1][0] * x0 + blk[1][1] * x1;
            }
            y[2 * i] = a;
            y[2 * i + 1] = b;
        }
        Ok(())
    }

    /// Expands to a dense row-major scalar matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim()]; self.dim()];
        for i in 0..self.n {
            for (j, b) in self.row(i) {
                for r in 0..2 {
                    for c in 0..2 {
                        d[2 * i + r][2 * j + c] = b[r][c];
                    }
                }
            }
        }
        d
    }

    /// Block adjacency lists (diagonal excluded).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
            .collect()
    }

    /// Matrix Market coordinate dump with flattened 1-based scalar indices.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut entries = Vec::new();
        for i in 0..self.n {
            for (j, b) in self.row(i) {
                for r in 0..2 {
                    for c in 0..2 {
                        if b[r][c] != 0.0 {
                            entries.push((2 * i + r + 1, 2 * j + c + 1, b[r][c]));
                        }
                    }
                }
            }
        }
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.dim(), self.dim(), entries.len())?;
        for (r, c, v) in entries {
            writeln!(w, "{r} {c} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Matrix Market dense column dump of a right-hand side.
pub fn write_vector_market<W: Write>(v: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x:.17e}")?;
    }
    Ok(())
}

/// Block-diagonal (Jacobi) preconditioner. Singular diagonal blocks fall back to identity.
#[derive(Debug, Clone)]
pub struct BlockJacobi {
    inv: Vec<Block>,
}

impl BlockJacobi {
    pub fn new(a: &BlockSparseMatrix) -> Self {
        BlockJacobi {
            inv: (0..a.n())
                .map(|i| block_inverse(&a.diagonal(i)).unwrap_or(IDENTITY_BLOCK))
                .collect(),
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, b) in self.inv.iter().enumerate() {
            let (x0, x1) = (x[2 * i], x[2 * i + 1]);
            y[2 * i] = b[0][0] * x0 + b[0][1] * x1;
            y[2 * i + 1] = b[1][0] * x0 + b[1][1] * x1;
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matvec() {
        let m = BlockSparseMatrix::identity(3);
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(m.matvec(&x).unwrap(), x);
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let m = BlockSparseMatrix::from_pattern(2, &[vec![1], vec![]]);
        assert_eq!(m.matvec(&[1.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn pattern_is_symmetric() {
        let m = BlockSparseMatrix::from_pattern(3, &[vec![2], vec![], vec![]]);
        assert_eq!(m.row(2).map(|(j, _)| j).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(m.row(0).map(|(j, _)| j).collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = BlockSparseMatrix::identity(2);
        assert!(matches!(m.matvec(&[1.0; 3]), Err(Error::DimensionMismatch { expected: 4, got: 3 })));
    }

    #[test]
    fn matrix_market_header() {
        let mut m = BlockSparseMatrix::identity(1);
        m.add(0, 0, &[[0.0, 2.0], [0.0, 0.0]]);
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real general"));
        assert_eq!(lines.next(), Some("2 2 3"));
    }
}
