//! Compressed-row sparse operators.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pde::BoundaryCondition;

/// Square sparse matrix in compressed-row storage, tagged with the boundary
/// condition it was assembled with.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    bc: BoundaryCondition,
    /// Rows that are plain identity rows (Dirichlet boundary nodes).
    identity_rows: Vec<bool>,
    /// Constants span the kernel (pure Neumann problem without potential).
    constant_kernel: bool,
}

/// Row-by-row builder. Rows must be pushed in order.
#[derive(Debug)]
pub struct CsrBuilder {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    identity_rows: Vec<bool>,
}

impl CsrBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        CsrBuilder {
            n,
            row_offsets,
            col_indices: Vec::with_capacity(nnz_hint),
            values: Vec::with_capacity(nnz_hint),
            identity_rows: Vec::with_capacity(n),
        }
    }

    /// Appends a row; duplicate columns are merged and entries sorted.
    pub fn push_row(&mut self, entries: &mut [(usize, f64)]) {
        entries.sort_unstable_by_key(|e| e.0);
        let start = self.col_indices.len();
        for &(c, v) in entries.iter() {
            debug_assert!(c < self.n);
            if self.col_indices.len() > start && *self.col_indices.last().unwrap() == c {
                *self.values.last_mut().unwrap() += v;
            } else {
                self.col_indices.push(c);
                self.values.push(v);
            }
        }
        self.row_offsets.push(self.col_indices.len());
        self.identity_rows.push(false);
    }

    pub fn push_identity_row(&mut self) {
        let r = self.row_offsets.len() - 1;
        self.col_indices.push(r);
        self.values.push(1.0);
        self.row_offsets.push(self.col_indices.len());
        self.identity_rows.push(true);
    }

    pub fn finish(self, bc: BoundaryCondition, constant_kernel: bool) -> SparseOperator {
        assert_eq!(self.row_offsets.len(), self.n + 1, "row count mismatch");
        SparseOperator {
            n: self.n,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
            bc,
            identity_rows: self.identity_rows,
            constant_kernel,
        }
    }
}

impl SparseOperator {
    /// Builds an operator from dense rows (test and oracle convenience).
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut b = CsrBuilder::new(n, n * 3);
        for row in rows {
            let mut e: Vec<(usize, f64)> =
                row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
            b.push_row(&mut e);
        }
        b.finish(BoundaryCondition::Dirichlet, false)
    }

    pub fn identity(n: usize) -> Self {
        let mut b = CsrBuilder::new(n, n);
        for _ in 0..n {
            b.push_identity_row();
        }
        b.finish(BoundaryCondition::Dirichlet, false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn has_constant_kernel(&self) -> bool {
        self.constant_kernel
    }

    pub fn is_identity_row(&self, i: usize) -> bool {
        self.identity_rows[i]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let r = self.row_offsets[i]..self.row_offsets[i + 1];
            let mut s = 0.0;
            for (c, v) in self.col_indices[r.clone()].iter().zip(&self.values[r]) {
                s += v * x[*c];
            }
            *yi = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        let mut y = alloc::vec![0.0; self.n];
        self.matvec(x, &mut y);
        Ok(y)
    }

    /// Largest |i - j| over stored entries, as (lower, upper).
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut up = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    lo = lo.max(i - j);
                } else {
                    up = up.max(j - i);
                }
            }
        }
        (lo, up)
    }

    /// `alpha * A + beta * I` on non-identity rows; identity rows are kept.
    pub fn affine(&self, alpha: f64, beta: f64) -> SparseOperator {
        let mut out = self.clone();
        for i in 0..self.n {
            if self.identity_rows[i] {
                continue;
            }
            let r = self.row_offsets[i]..self.row_offsets[i + 1];
            let mut has_diag = false;
            for k in r {
                out.values[k] *= alpha;
                if out.col_indices[k] == i {
                    out.values[k] += beta;
                    has_diag = true;
                }
            }
            assert!(has_diag || beta == 0.0, "affine shift needs a stored diagonal");
        }
        out.constant_kernel = self.constant_kernel && beta == 0.0;
        out
    }

    /// Replaces row `i` by an identity row (used to pin a gauge).
    pub fn with_identity_row(&self, i: usize) -> SparseOperator {
        let mut b = CsrBuilder::new(self.n, self.nnz());
        for r in 0..self.n {
            if r == i || self.identity_rows[r] {
                b.push_identity_row();
            } else {
                let mut e: Vec<(usize, f64)> = self.row(r).collect();
                b.push_row(&mut e);
            }
        }
        b.finish(self.bc, false)
    }

    /// Positive diagonal and nonpositive off-diagonals on every row.
    pub fn has_m_matrix_sign_pattern(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| if j == i { v > 0.0 } else { v <= 0.0 }))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = alloc::vec![alloc::vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn builder_merges_duplicates() {
        let mut b = CsrBuilder::new(2, 4);
        b.push_row(&mut [(1, 1.0), (0, 2.0), (1, 3.0)]);
        b.push_identity_row();
        let a = b.finish(BoundaryCondition::Dirichlet, false);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.nnz(), 3);
        assert!(a.is_identity_row(1));
    }

    #[test]
    fn matvec_matches_dense() {
        let rows = vec![vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]];
        let a = SparseOperator::from_dense(&rows);
        let y = a.apply(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 4.0]);
        assert_eq!(a.bandwidth(), (1, 1));
        assert!(a.apply(&[1.0]).is_err());
    }

    #[test]
    fn affine_keeps_identity_rows() {
        let mut b = CsrBuilder::new(2, 4);
        b.push_identity_row();
        b.push_row(&mut [(0, -1.0), (1, 2.0)]);
        let a = b.finish(BoundaryCondition::Dirichlet, false);
        let c = a.affine(0.5, 1.0);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(1, 1), 2.0);
        assert_eq!(c.get(1, 0), -0.5);
    }
}
