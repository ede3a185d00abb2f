//! Householder reflectors and their compact WY accumulation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::math::{axpy, dot, norm_sq, sqrt};
use crate::matrix::DenseMatrix;

/// `H = I − β v vᵀ` with `v[0] = 1`, mapping `x` to `α e₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reflector {
    pub v: Vec<f64>,
    pub beta: f64,
    pub alpha: f64,
}

/// Reflector annihilating `x[1..]`.
///
/// `α = −sign(x₁)‖x‖` with `sign(0) = +1`. A zero vector gives the identity
/// reflector with `α = 0`; a vector whose tail is already zero gives `β = 0` and
/// keeps `α = x₁`.
pub fn householder_reflector(x: &[f64]) -> Result<Reflector> {
    if x.is_empty() {
        return Err(Error::Empty("householder_reflector needs a non-empty vector"));
    }
    let mut v = vec![0.0; x.len()];
    v[0] = 1.0;
    let x0 = x[0];
    let tail_sq = norm_sq(&x[1..]);
    if tail_sq == 0.0 {
        return Ok(Reflector { v, beta: 0.0, alpha: x0 });
    }
    let norm = sqrt(x0 * x0 + tail_sq);
    let alpha = if x0 >= 0.0 { -norm } else { norm };
    let v0 = x0 - alpha;
    for (vi, xi) in v[1..].iter_mut().zip(&x[1..]) {
        *vi = xi / v0;
    }
    let beta = -v0 / alpha;
    Ok(Reflector { v, beta, alpha })
}

impl Reflector {
    pub fn identity(len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = 1.0;
        Self { v, beta: 0.0, alpha: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// `x ← (I − β v vᵀ) x`
    #[inline]
    pub fn apply(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.v.len());
        if self.beta == 0.0 {
            return;
        }
        let s = self.beta * dot(&self.v, x);
        axpy(-s, &self.v, x);
    }

    /// Applies the reflector to rows `offset..offset+len` of columns `cols` of `a`.
    pub fn apply_to_cols(&self, a: &mut DenseMatrix, offset: usize, cols: core::ops::Range<usize>, flops: &Flops) {
        let len = self.v.len();
        flops.add(4 * len * cols.len());
        for j in cols {
            self.apply(&mut a.col_mut(j)[offset..offset + len]);
        }
    }
}

/// `Q = I − Y T Yᵀ` for `j` reflectors acting on `ℝᵐ`.
///
/// Column `i` of `Y` holds the reflector for step `i`: zeros above row `i`, a unit at
/// row `i`. `T` is `j x j` upper triangular.
#[derive(Clone, Debug, PartialEq)]
pub struct WyFactor {
    y: DenseMatrix,
    t: DenseMatrix,
}

impl WyFactor {
    pub fn new(m: usize) -> Self {
        Self { y: DenseMatrix::zeros(m, 0), t: DenseMatrix::zeros(0, 0) }
    }

    pub fn m(&self) -> usize {
        self.y.rows()
    }

    /// Number of accumulated reflectors.
    pub fn len(&self) -> usize {
        self.y.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn y(&self) -> &DenseMatrix {
        &self.y
    }

    pub fn t(&self) -> &DenseMatrix {
        &self.t
    }

    /// Appends `I − β v vᵀ` where `v` covers rows `j..m` (so `v.len() = m − j`).
    /// The new factor is `Q_old · (I − β v vᵀ)`.
    pub fn append(&mut self, v: &[f64], beta: f64) -> Result<()> {
        self.append_counted(v, beta, &Flops::new())
    }

    pub fn append_counted(&mut self, v: &[f64], beta: f64, flops: &Flops) -> Result<()> {
        let m = self.m();
        let j = self.len();
        if j >= m || v.len() != m - j {
            return Err(Error::Dimension("reflector length must equal m minus reflector count"));
        }
        if v[0] != 1.0 && beta != 0.0 {
            return Err(Error::InvalidParameter("reflector must have unit leading entry"));
        }
        // z = −β T (Yᵀ v), restricted to rows j.. where v lives.
        let ytv: Vec<f64> = (0..j).map(|i| dot(&self.y.col(i)[j..], v)).collect();
        flops.add(2 * j * v.len() + j * j);
        let mut z = vec![0.0; j];
        for i in 0..j {
            let mut s = 0.0;
            for p in i..j {
                s += self.t[(i, p)] * ytv[p];
            }
            z[i] = -beta * s;
        }

        let mut ycol = vec![0.0; m];
        ycol[j..].copy_from_slice(v);
        ycol[j] = 1.0;
        let mut ydata = core::mem::replace(&mut self.y, DenseMatrix::zeros(0, 0)).into_vec();
        ydata.extend_from_slice(&ycol);
        self.y = DenseMatrix::from_col_major(m, j + 1, ydata)?;

        let mut t = DenseMatrix::zeros(j + 1, j + 1);
        for c in 0..j {
            for r in 0..=c {
                t[(r, c)] = self.t[(r, c)];
            }
        }
        for r in 0..j {
            t[(r, j)] = z[r];
        }
        t[(j, j)] = beta;
        self.t = t;
        Ok(())
    }

    /// `Yᵀ x` exploiting the zero pattern of `Y`.
    fn yt_vec(&self, x: &[f64], flops: &Flops) -> Vec<f64> {
        let j = self.len();
        let m = self.m();
        flops.add((0..j).map(|i| 2 * (m - i)).sum());
        (0..j).map(|i| dot(&self.y.col(i)[i..], &x[i..])).collect()
    }

    /// `x −= Y w`
    fn sub_y_vec(&self, w: &[f64], x: &mut [f64], flops: &Flops) {
        let m = self.m();
        for (i, &wi) in w.iter().enumerate() {
            if wi != 0.0 {
                axpy(-wi, &self.y.col(i)[i..], &mut x[i..]);
            }
            flops.add(2 * (m - i));
        }
    }

    /// `T z` (`transpose = false`) or `Tᵀ z`.
    fn t_vec(&self, z: &[f64], transpose: bool) -> Vec<f64> {
        let j = self.len();
        let mut w = vec![0.0; j];
        for r in 0..j {
            let mut s = 0.0;
            if transpose {
                for p in 0..=r {
                    s += self.t[(p, r)] * z[p];
                }
            } else {
                for p in r..j {
                    s += self.t[(r, p)] * z[p];
                }
            }
            w[r] = s;
        }
        w
    }

    /// `x ← Qᵀ x = x − Y Tᵀ Yᵀ x`
    pub fn apply_qt(&self, x: &mut [f64], flops: &Flops) {
        if self.is_empty() {
            return;
        }
        let z = self.yt_vec(x, flops);
        let w = self.t_vec(&z, true);
        self.sub_y_vec(&w, x, flops);
    }

    /// `x ← Q x = x − Y T Yᵀ x`
    pub fn apply_q(&self, x: &mut [f64], flops: &Flops) {
        if self.is_empty() {
            return;
        }
        let z = self.yt_vec(x, flops);
        let w = self.t_vec(&z, false);
        self.sub_y_vec(&w, x, flops);
    }

    pub fn apply_qt_mat(&self, a: &mut DenseMatrix, flops: &Flops) {
        for j in 0..a.cols() {
            self.apply_qt(a.col_mut(j), flops);
        }
    }

    pub fn apply_q_mat(&self, a: &mut DenseMatrix, flops: &Flops) {
        for j in 0..a.cols() {
            self.apply_q(a.col_mut(j), flops);
        }
    }

    /// First `k` columns of `Q`.
    pub fn q_thin(&self, k: usize) -> DenseMatrix {
        let m = self.m();
        let mut q = DenseMatrix::zeros(m, k);
        for i in 0..k {
            q[(i, i)] = 1.0;
        }
        self.apply_q_mat(&mut q, &Flops::new());
        q
    }

    /// Dense `Q`, `m x m`. Test-scale only.
    pub fn q_full(&self) -> DenseMatrix {
        self.q_thin(self.m())
    }
}

/// Unpivoted Householder QR.
///
/// Returns the reflectors and the `min(m, n) x n` upper-trapezoidal `R`.
pub fn qr_nopivot(a: &DenseMatrix, flops: &Flops) -> (WyFactor, DenseMatrix) {
    let (m, n) = a.shape();
    let kmax = m.min(n);
    let mut w = a.clone();
    let mut wy = WyFactor::new(m);
    for j in 0..kmax {
        let h = householder_reflector(&w.col(j)[j..]).expect("non-empty column");
        flops.add(3 * (m - j));
        h.apply_to_cols(&mut w, j, j + 1..n, flops);
        w[(j, j)] = h.alpha;
        for i in j + 1..m {
            w[(i, j)] = 0.0;
        }
        wy.append_counted(&h.v, h.beta, flops).expect("consistent reflector length");
    }
    let r = DenseMatrix::from_fn(kmax, n, |i, j| if i <= j { w[(i, j)] } else { 0.0 });
    (wy, r)
}

/// Thin QR: `Q` (`m x min(m,n)`, orthonormal columns) and `R`.
pub fn thin_qr(a: &DenseMatrix, flops: &Flops) -> (DenseMatrix, DenseMatrix) {
    let (wy, r) = qr_nopivot(a, flops);
    let k = r.rows();
    let mut q = DenseMatrix::zeros(a.rows(), k);
    for i in 0..k {
        q[(i, i)] = 1.0;
    }
    wy.apply_q_mat(&mut q, flops);
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;

    fn dense_reflector(v: &[f64], beta: f64, offset: usize, m: usize) -> DenseMatrix {
        DenseMatrix::from_fn(m, m, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            let vi = if i >= offset { v[i - offset] } else { 0.0 };
            let vj = if j >= offset { v[j - offset] } else { 0.0 };
            id - beta * vi * vj
        })
    }

    #[test]
    fn reflects_3_4() {
        let h = householder_reflector(&[3.0, 4.0]).unwrap();
        assert!((h.alpha.abs() - 5.0).abs() < 1e-15);
        assert!(h.alpha < 0.0);
        let mut x = [3.0, 4.0];
        h.apply(&mut x);
        assert!((x[0] - h.alpha).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
        assert_eq!(h.v[0], 1.0);
    }

    #[test]
    fn axis_aligned_and_zero_vectors() {
        let h = householder_reflector(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h.beta, 0.0);
        assert_eq!(h.alpha, 1.0);
        let z = householder_reflector(&[0.0, 0.0]).unwrap();
        assert_eq!((z.beta, z.alpha), (0.0, 0.0));
        assert_eq!(z.v, vec![1.0, 0.0]);
        assert!(householder_reflector(&[]).is_err());
    }

    #[test]
    fn negative_leading_entry_gives_positive_alpha() {
        let h = householder_reflector(&[-1.0, 2.0, 2.0]).unwrap();
        assert!((h.alpha - 3.0).abs() < 1e-15);
    }

    #[test]
    fn first_append_sets_t_to_beta() {
        let mut wy = WyFactor::new(3);
        wy.append(&[1.0, 0.5, -0.5], 0.8).unwrap();
        assert_eq!(wy.t().as_slice(), &[0.8]);
        assert_eq!(wy.y().col(0), &[1.0, 0.5, -0.5]);
    }

    #[test]
    fn two_reflectors_match_explicit_product() {
        let x = [1.0, -2.0, 0.5, 3.0];
        let h1 = householder_reflector(&x).unwrap();
        let y = [0.3, 1.1, -0.7];
        let h2 = householder_reflector(&y).unwrap();
        let mut wy = WyFactor::new(4);
        wy.append(&h1.v, h1.beta).unwrap();
        wy.append(&h2.v, h2.beta).unwrap();
        let want = dense_reflector(&h1.v, h1.beta, 0, 4).matmul(&dense_reflector(&h2.v, h2.beta, 1, 4));
        assert!(wy.q_full().sub(&want).norm_fro() < 1e-14);
    }

    #[test]
    fn identity_reflector_leaves_q_unchanged() {
        let h = householder_reflector(&[2.0, 1.0, 1.0]).unwrap();
        let mut wy = WyFactor::new(3);
        wy.append(&h.v, h.beta).unwrap();
        let before = wy.q_full();
        wy.append(&[1.0, 0.0], 0.0).unwrap();
        assert!(wy.q_full().sub(&before).norm_fro() < 1e-14);
    }

    #[test]
    fn append_rejects_wrong_length() {
        let mut wy = WyFactor::new(3);
        assert!(wy.append(&[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn qr_nopivot_reconstructs_and_is_orthogonal() {
        let a = gaussian_matrix(9, 6, 11, 0);
        let (wy, r) = qr_nopivot(&a, &Flops::new());
        let q = wy.q_thin(6);
        assert!(q.matmul(&r).sub(&a).norm_fro() < 1e-13 * a.norm_fro());
        assert!(wy.q_full().orthogonality_defect() < 1e-12 * 3.0);
        let (q2, r2) = thin_qr(&a, &Flops::new());
        assert!(q2.matmul(&r2).sub(&a).norm_fro() < 1e-13 * a.norm_fro());
    }

    #[test]
    fn qt_inverts_q() {
        let a = gaussian_matrix(7, 4, 2, 0);
        let (wy, _) = qr_nopivot(&a, &Flops::new());
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let mut y = x.clone();
        let f = Flops::new();
        wy.apply_qt(&mut y, &f);
        wy.apply_q(&mut y, &f);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
