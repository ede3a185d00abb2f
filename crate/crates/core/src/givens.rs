//! Givens rotations on adjacent coordinates.

use alloc::vec::Vec;

use crate::math::hypot;
use crate::matrix::DenseMatrix;

/// Rotation `G` acting on coordinates `(p, p+1)`:
/// `x_p ← c x_p + s x_{p+1}`, `x_{p+1} ← −s x_p + c x_{p+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Givens {
    pub p: usize,
    pub c: f64,
    pub s: f64,
}

impl Givens {
    /// Rotation that maps `(a, b)` to `(hypot(a, b), 0)`.
    pub fn zeroing(p: usize, a: f64, b: f64) -> Self {
        if b == 0.0 {
            return Self { p, c: 1.0, s: 0.0 };
        }
        let r = hypot(a, b);
        Self { p, c: a / r, s: b / r }
    }

    /// `x ← G x`
    #[inline]
    pub fn apply(&self, x: &mut [f64]) {
        let (a, b) = (x[self.p], x[self.p + 1]);
        x[self.p] = self.c * a + self.s * b;
        x[self.p + 1] = -self.s * a + self.c * b;
    }

    /// `x ← Gᵀ x`
    #[inline]
    pub fn apply_t(&self, x: &mut [f64]) {
        let (a, b) = (x[self.p], x[self.p + 1]);
        x[self.p] = self.c * a - self.s * b;
        x[self.p + 1] = self.s * a + self.c * b;
    }
}

/// Restores upper-trapezoidal form after a cyclic column shift that left single
/// subdiagonal entries `R(c+1, c)` for `c ≥ start_col`.
///
/// Rotations are applied from the left to all columns from `c` on and returned in
/// application order, so that `R_new = G_last ⋯ G_first R_old`.
pub fn givens_retriangularize(r: &mut DenseMatrix, start_col: usize) -> Vec<Givens> {
    let (m, n) = r.shape();
    let mut rots = Vec::new();
    for c in start_col..n.min(m.saturating_sub(1)) {
        let b = r[(c + 1, c)];
        if b == 0.0 {
            continue;
        }
        let g = Givens::zeroing(c, r[(c, c)], b);
        for j in c..n {
            let col = r.col_mut(j);
            g.apply(col);
        }
        r[(c + 1, c)] = 0.0;
        rots.push(g);
    }
    rots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;
    use crate::svd::singular_values;

    fn upper(a: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| if i <= j { a[(i, j)] } else { 0.0 })
    }

    #[test]
    fn triangular_input_needs_no_rotation() {
        let mut r = upper(&gaussian_matrix(4, 4, 1, 0));
        let before = r.clone();
        assert!(givens_retriangularize(&mut r, 0).is_empty());
        assert_eq!(r, before);
    }

    #[test]
    fn single_bulge_preserves_gram() {
        let mut r = upper(&gaussian_matrix(3, 3, 2, 0));
        r[(2, 1)] = 0.7;
        let gram = r.t_matmul(&r);
        let rots = givens_retriangularize(&mut r, 0);
        assert_eq!(rots.len(), 1);
        assert_eq!(r[(2, 1)], 0.0);
        assert!(r.t_matmul(&r).sub(&gram).norm_fro() < 1e-14 * gram.norm_fro().max(1.0));
    }

    #[test]
    fn cyclic_shift_preserves_singular_values() {
        let r0 = upper(&gaussian_matrix(5, 5, 3, 0));
        // Move column 1 to the end; columns 1..4 become Hessenberg.
        let mut r = r0.select_cols(&[0, 2, 3, 4, 1]);
        let rots = givens_retriangularize(&mut r, 1);
        assert_eq!(rots.len(), 3);
        for i in 0..5 {
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
        let s0 = singular_values(&r0);
        let s1 = singular_values(&r);
        for (a, b) in s0.iter().zip(&s1) {
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn transpose_undoes_rotation() {
        let g = Givens::zeroing(0, 3.0, 4.0);
        let mut x = [3.0, 4.0];
        g.apply(&mut x);
        assert!((x[0] - 5.0).abs() < 1e-15 && x[1].abs() < 1e-15);
        g.apply_t(&mut x);
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 4.0).abs() < 1e-15);
    }
}
