//! Compressed-row complex operators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::parallel;

/// Square complex matrix in CSR form. Columns are sorted within each row and
/// duplicate entries are summed on construction; explicit zeros are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(
                r < dim && c < dim,
                "entry ({r}, {c}) outside dimension {dim}"
            );
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
            hermitian: false,
        };
        op.hermitian = op.hermitian_residual() == 0.0;
        op
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_triplets(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Hermiticity flag, set when the entry set equals its conjugate transpose exactly.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Largest `|A_rc - conj(A_cr)|`.
    pub fn hermitian_residual(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    pub fn diagonal_entries(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (r, c, v * factor)))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.entries().chain(other.entries()),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.entries()
                .chain(other.entries().map(|(r, c, v)| (r, c, -v))),
        ))
    }

    /// Sum of operators sharing one dimension.
    pub fn sum<'a>(dim: usize, ops: impl IntoIterator<Item = &'a SparseOperator>) -> Result<Self> {
        let mut triplets = Vec::new();
        for op in ops {
            if op.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim,
                });
            }
            triplets.extend(op.entries());
        }
        Ok(Self::from_triplets(dim, triplets))
    }

    /// Operator product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    triplets.push((r, c, a * b));
                }
            }
        }
        Ok(Self::from_triplets(self.dim, triplets))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Largest absolute entry (zero for the empty operator).
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute row sum; bounds the spectral norm of a Hermitian operator.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        self.apply_add(C64::new(1.0, 0.0), x, y);
    }

    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut y);
        y
    }

    /// `y += alpha A x`, split across threads for large operators.
    pub fn apply_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if parallel::worth_splitting(self.dim) {
            self.apply_add_par(alpha, x, y);
        } else {
            self.apply_add_seq(alpha, x, y);
        }
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        let mut acc = C64::new(0.0, 0.0);
        for (c, v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
            acc += v * x[*c];
        }
        acc
    }

    /// Single-threaded kernel; always available.
    pub fn apply_add_seq(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out += alpha * self.row_dot(r, x);
        }
    }

    /// Row-blocked kernel. Each output row is written by exactly one worker,
    /// so results are bit-identical to [`Self::apply_add_seq`].
    #[cfg(feature = "parallel")]
    pub fn apply_add_par(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        use rayon::prelude::*;
        y.par_chunks_mut(parallel::ROW_BLOCK)
            .enumerate()
            .for_each(|(block, chunk)| {
                let base = block * parallel::ROW_BLOCK;
                for (i, out) in chunk.iter_mut().enumerate() {
                    *out += alpha * self.row_dot(base + i, x);
                }
            });
    }

    #[cfg(not(feature = "parallel"))]
    pub fn apply_add_par(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        self.apply_add_seq(alpha, x, y);
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, C64::new(0.0, 0.0));
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let dim = m.nrows();
        Self::from_triplets(
            dim,
            (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c, m[(r, c)]))),
        )
    }

    /// Compresses onto the basis vectors of `sub`. Entries leaving the
    /// subspace are dropped, so the result is exact only for invariant subspaces.
    pub fn restrict(&self, sub: &super::Subspace) -> Self {
        let mut triplets = Vec::new();
        for (i, &full_r) in sub.indices().iter().enumerate() {
            for (c, v) in self.row(full_r) {
                if let Some(j) = sub.position(c) {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(sub.dim(), triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let op = SparseOperator::from_triplets(
            3,
            [
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(2.0, 0.0)),
                (2, 2, c(1.0, 0.0)),
                (2, 2, c(-1.0, 0.0)),
            ],
        );
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1), c(3.0, 0.0));
        assert!(!op.is_hermitian());
    }

    #[test]
    fn hermitian_flag_matches_adjoint() {
        let op = SparseOperator::from_triplets(
            2,
            [
                (0, 1, c(0.5, 0.25)),
                (1, 0, c(0.5, -0.25)),
                (0, 0, c(1.0, 0.0)),
            ],
        );
        assert!(op.is_hermitian());
        assert_eq!(op.adjoint(), op);
        let skew = op.scale(c(0.0, 1.0));
        assert!(!skew.is_hermitian());
    }

    #[test]
    fn matmul_and_commutator() {
        // Pauli x and z anticommute: [x, z] = -2 i y
        let x = SparseOperator::from_triplets(2, [(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]);
        let z = SparseOperator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let comm = x.commutator(&z).unwrap();
        assert_eq!(comm.get(0, 1), c(-2.0, 0.0));
        assert_eq!(comm.get(1, 0), c(2.0, 0.0));
        assert_eq!(x.matmul(&x).unwrap(), SparseOperator::identity(2));
    }

    #[test]
    fn kernels_agree() {
        let dim = 5000;
        let op = SparseOperator::from_triplets(
            dim,
            (0..dim).flat_map(|i| {
                let j = (i * 7 + 3) % dim;
                [
                    (i, j, c(0.3, -0.1 * i as f64 / dim as f64)),
                    (i, i, c(1.0 + i as f64, 0.0)),
                ]
            }),
        );
        let x: Vec<C64> = (0..dim)
            .map(|i| c((i as f64).sin(), (i as f64).cos()))
            .collect();
        let mut a = vec![c(0.0, 0.0); dim];
        let mut b = a.clone();
        op.apply_add_seq(c(0.5, 0.5), &x, &mut a);
        op.apply_add_par(c(0.5, 0.5), &x, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = SparseOperator::identity(2);
        let b = SparseOperator::identity(3);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch { .. })));
    }
}
