//! Banded LU with partial pivoting on a reverse Cuthill-McKee ordering, and a
//! small dense LU.

use std::collections::VecDeque;

use super::matrix::BlockSparseMatrix;
use crate::error::{Error, Result};

/// Band storage above this many entries is refused.
pub const MAX_BAND_ENTRIES: usize = 40_000_000;

/// Reverse Cuthill-McKee ordering of a graph given by adjacency lists.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let degree = |v: usize| adj[v].len();

    while order.len() < n {
        let start = (0..n)
            .filter(|&v| !seen[v])
            .min_by_key(|&v| (degree(v), v))
            .expect("unvisited vertex exists");
        let root = pseudo_peripheral(adj, start);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !seen[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            for u in next {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    level
}

fn pseudo_peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, root);
        let depth = level.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0);
        if depth <= ecc && root != start {
            break;
        }
        ecc = depth;
        let far = (0..adj.len())
            .filter(|&v| level[v] == depth)
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap_or(root);
        if far == root {
            break;
        }
        root = far;
    }
    root
}

/// LU factors of a permuted banded matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
    /// scalar permutation, `perm[new] = old`
    perm: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        r * self.w + (c + self.kl - r)
    }

    pub fn factor(a: &BlockSparseMatrix) -> Result<Self> {
        let block_perm = reverse_cuthill_mckee(&a.adjacency());
        let nb = a.n();
        let mut inv_block = vec![0; nb];
        for (new, &old) in block_perm.iter().enumerate() {
            inv_block[old] = new;
        }
        let n = a.dim();
        let perm: Vec<usize> = block_perm.iter().flat_map(|&b| [2 * b, 2 * b + 1]).collect();

        let mut kl = 0;
        for i in 0..nb {
            for (j, _) in a.row(i) {
                let (ri, cj) = (inv_block[i], inv_block[j]);
                kl = kl.max(ri.abs_diff(cj) * 2 + 1);
            }
        }
        let ku = kl;
        let w = 2 * kl + ku + 1;
        let entries = n.saturating_mul(w);
        if entries > MAX_BAND_ENTRIES {
            return Err(Error::BandTooLarge { entries });
        }
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            w,
            data: vec![0.0; entries],
            piv: vec![0; n],
            perm,
        };
        for i in 0..nb {
            for (j, b) in a.row(i) {
                let (ri, cj) = (inv_block[i], inv_block[j]);
                for r in 0..2 {
                    for c in 0..2 {
                        let k = lu.at(2 * ri + r, 2 * cj + c);
                        lu.data[k] = b[r][c];
                    }
                }
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    pub fn band_entries(&self) -> usize {
        self.data.len()
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.w);
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.at(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= 1e-300 * scale.max(1e-300) || !best.is_finite() {
                return Err(Error::SingularPivot { row: k });
            }
            self.piv[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (ik, ip) = (self.at(k, c), self.at(p, c));
                    self.data.swap(ik, ip);
                }
            }
            let pivot = self.data[self.at(k, k)];
            let kbase = k * w + kl - k;
            for r in k + 1..=last_row {
                let rk = self.at(r, k);
                if self.data[rk] == 0.0 {
                    continue;
                }
                let l = self.data[rk] / pivot;
                self.data[rk] = l;
                let rbase = r * w + kl - r;
                for c in k + 1..=last_col {
                    self.data[rbase + c] -= l * self.data[kbase + c];
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                for r in k + 1..=(k + self.kl).min(n - 1) {
                    y[r] -= self.data[self.at(r, k)] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for c in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                s -= self.data[self.at(k, c)] * y[c];
            }
            y[k] = s / self.data[self.at(k, k)];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .expect("non-empty pivot range");
        if a[p][k] == 0.0 || !a[p][k].is_finite() {
            return Err(Error::SingularPivot { row: k });
        }
        a.swap(k, p);
        b.swap(k, p);
        for r in k + 1..n {
            let l = a[r][k] / a[k][k];
            if l == 0.0 {
                continue;
            }
            for c in k..n {
                a[r][c] -= l * a[k][c];
            }
            b[r] -= l * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[k][c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcm_is_a_permutation() {
        let adj = vec![vec![3], vec![2, 4], vec![1], vec![0, 4], vec![1, 3]];
        let mut p = reverse_cuthill_mckee(&adj);
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rcm_handles_disconnected_graphs() {
        let adj = vec![vec![], vec![2], vec![1]];
        assert_eq!(reverse_cuthill_mckee(&adj).len(), 3);
    }

    #[test]
    fn dense_solve_small() {
        let a = vec![vec![0.0, 2.0], vec![3.0, 1.0]];
        let x = dense_solve(a, vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn banded_needs_pivoting() {
        let mut m = BlockSparseMatrix::from_pattern(2, &[vec![1], vec![]]);
        m.set(0, 0, &[[0.0, 1.0], [1.0, 0.0]]);
        m.set(0, 1, &[[2.0, 0.0], [0.0, 0.0]]);
        m.set(1, 0, &[[0.0, 0.0], [1.0, 0.0]]);
        m.set(1, 1, &[[0.0, 3.0], [4.0, 0.0]]);
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = BandedLu::factor(&m).unwrap().solve(&b).unwrap();
        let y = dense_solve(m.to_dense(), b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = BlockSparseMatrix::from_pattern(1, &[vec![]]);
        assert!(matches!(BandedLu::factor(&m), Err(Error::SingularPivot { .. })));
    }
}
