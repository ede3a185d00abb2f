use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut, Range};

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::math::{axpy, dot, norm_sq, sqrt};

/// Column-major dense real matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, " ")?;
            for j in 0..self.cols.min(8) {
                write!(f, " {:>11.4e}", self[(i, j)])?;
            }
            writeln!(f, "{}", if self.cols > 8 { " ..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Square matrix with `d` on the diagonal.
    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension("data length must equal rows * cols"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != n) {
            return Err(Error::Dimension("ragged rows"));
        }
        Ok(Self::from_fn(m, n, |i, j| rows[i].as_ref()[j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Mutable views of two distinct columns.
    pub fn two_cols_mut(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert_ne!(a, b);
        let r = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * r);
            (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * r);
            (&mut hi[..r], &mut lo[b * r..(b + 1) * r])
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            let (x, y) = self.two_cols_mut(a, b);
            x.swap_with_slice(y);
        }
    }

    pub fn count_non_finite(&self) -> usize {
        self.data.iter().filter(|x| !x.is_finite()).count()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.count_non_finite() {
            0 => Ok(()),
            n => Err(Error::NonFinite(n)),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let r0 = rows.start;
        let c0 = cols.start;
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(r0 + i, c0 + j)])
    }

    /// Leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> Self {
        let k = k.min(self.cols);
        Self { rows: self.rows, cols: k, data: self.data[..k * self.rows].to_vec() }
    }

    /// Columns `idx[0], idx[1], ...` in that order.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self { rows: self.rows, cols: idx.len(), data }
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        for j in 0..block.cols {
            let dst = &mut self.col_mut(c0 + j)[r0..r0 + block.rows];
            dst.copy_from_slice(block.col(j));
        }
    }

    pub fn norm_fro(&self) -> f64 {
        sqrt(norm_sq(&self.data))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn col_norms_sq(&self) -> Vec<f64> {
        (0..self.cols).map(|j| norm_sq(self.col(j))).collect()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape(), "add_scaled: shape mismatch");
        axpy(alpha, &other.data, &mut self.data);
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        let mut m = self.clone();
        m.add_scaled(-1.0, other);
        m
    }

    pub fn add(&self, other: &DenseMatrix) -> Self {
        let mut m = self.clone();
        m.add_scaled(1.0, other);
        m
    }

    /// `self * other`
    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        self.matmul_counted(other, &Flops::new())
    }

    pub fn matmul_counted(&self, other: &DenseMatrix, flops: &Flops) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut c = Self::zeros(self.rows, other.cols);
        gemm_acc(1.0, self, other, &mut c, flops);
        c
    }

    /// `selfᵀ * other`
    pub fn t_matmul(&self, other: &DenseMatrix) -> Self {
        self.t_matmul_counted(other, &Flops::new())
    }

    pub fn t_matmul_counted(&self, other: &DenseMatrix, flops: &Flops) -> Self {
        assert_eq!(self.rows, other.rows, "t_matmul: inner dimension mismatch");
        let mut c = Self::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            let b = other.col(j);
            for i in 0..self.cols {
                c[(i, j)] = dot(self.col(i), b);
            }
        }
        flops.add(2 * self.rows * self.cols * other.cols);
        c
    }

    /// `self * otherᵀ`
    pub fn matmul_t(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.cols, "matmul_t: inner dimension mismatch");
        let mut c = Self::zeros(self.rows, other.rows);
        for p in 0..self.cols {
            let a = self.col(p);
            let b = other.col(p);
            for j in 0..other.rows {
                let s = b[j];
                if s != 0.0 {
                    axpy(s, a, c.col_mut(j));
                }
            }
        }
        c
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), &mut y);
            }
        }
        y
    }

    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// `‖QᵀQ − I‖_F`
    pub fn orthogonality_defect(&self) -> f64 {
        let mut g = self.t_matmul(self);
        for i in 0..g.rows {
            g[(i, i)] -= 1.0;
        }
        g.norm_fro()
    }

    /// Spectral norm by power iteration on `AᵀA`, stopped at `rel_tol` relative change.
    pub fn norm2_estimate(&self, rel_tol: f64, max_iter: usize) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        // Deterministic start: column sums plus a small ramp avoids orthogonal starts.
        let mut x: Vec<f64> =
            (0..self.cols).map(|j| self.col(j).iter().sum::<f64>() + 1.0 + j as f64 / self.cols as f64).collect();
        let mut est = 0.0;
        for _ in 0..max_iter {
            let nx = sqrt(norm_sq(&x));
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let y = self.matvec(&x);
            let new = sqrt(norm_sq(&y));
            x = self.t_matvec(&y);
            if (new - est).abs() <= rel_tol * new {
                return new;
            }
            est = new;
        }
        est
    }
}

/// `c += alpha * a * b`
pub(crate) fn gemm_acc(alpha: f64, a: &DenseMatrix, b: &DenseMatrix, c: &mut DenseMatrix, flops: &Flops) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!((c.rows, c.cols), (a.rows, b.cols));
    for j in 0..b.cols {
        let bj = b.col(j);
        let cj = c.col_mut(j);
        for (p, &s) in bj.iter().enumerate() {
            if s != 0.0 {
                axpy(alpha * s, a.col(p), cj);
            }
        }
    }
    flops.add(2 * a.rows * a.cols * b.cols);
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_column_major() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(a.as_slice(), &[1.0, 3.0, 5.0, 2.0, 4.0, 6.0]);
        assert_eq!(a[(2, 1)], 6.0);
        assert_eq!(a.transpose().shape(), (2, 3));
    }

    #[test]
    fn products_agree() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        let b = DenseMatrix::from_fn(3, 5, |i, j| (i as f64 + 1.0) * (j as f64 - 1.0));
        let c = a.matmul(&b);
        let c2 = a.transpose().t_matmul(&b);
        let c3 = a.matmul_t(&b.transpose());
        for i in 0..4 {
            for j in 0..5 {
                let want: f64 = (0..3).map(|p| a[(i, p)] * b[(p, j)]).sum();
                assert_eq!(c[(i, j)], want);
                assert_eq!(c2[(i, j)], want);
                assert_eq!(c3[(i, j)], want);
            }
        }
    }

    #[test]
    fn matmul_counts_exactly_2mnr() {
        let f = Flops::new();
        let a = DenseMatrix::from_fn(7, 5, |i, j| (i + j) as f64 + 1.0);
        let b = DenseMatrix::from_fn(5, 3, |i, j| (i * j) as f64 + 1.0);
        a.matmul_counted(&b, &f);
        assert_eq!(f.get(), 2 * 7 * 5 * 3);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: [&[f64]; 2] = [&[1.0, 2.0], &[3.0]];
        assert!(DenseMatrix::from_rows(&rows).is_err());
        assert!(DenseMatrix::from_col_major(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let a = DenseMatrix::from_diag(&[3.0, -7.0, 2.0]);
        let n = a.norm2_estimate(1e-12, 500);
        assert!((n - 7.0).abs() < 1e-6);
    }
}
