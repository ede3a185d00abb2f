//! Deterministic partial QR with column pivoting.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::householder::{householder_reflector, WyFactor};
use crate::math::norm_sq;
use crate::matrix::DenseMatrix;

/// Relative threshold below which a downdated squared norm is recomputed.
pub const DOWNDATE_GUARD: f64 = 1e-8;

/// Column permutation `Π`: column `c` of `AΠ` is column `perm[c]` of `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Validates that `perm` is a bijection on `0..perm.len()`.
    pub fn from_vec(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = alloc::vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidParameter("not a permutation"));
            }
            seen[p] = true;
        }
        Ok(Self(perm))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    pub(crate) fn as_mut_vec(&mut self) -> &mut Vec<usize> {
        &mut self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = alloc::vec![0; self.0.len()];
        for (c, &p) in self.0.iter().enumerate() {
            inv[p] = c;
        }
        Self(inv)
    }

    /// `AΠ`
    pub fn permute_cols(&self, a: &DenseMatrix) -> DenseMatrix {
        a.select_cols(&self.0)
    }

    /// `MΠᵀ`, undoing [`Permutation::permute_cols`].
    pub fn unpermute_cols(&self, m: &DenseMatrix) -> DenseMatrix {
        m.select_cols(self.inverse().as_slice())
    }
}

/// `r_i ← r_i − row_i²` on squared norms, with cancellation guard.
///
/// When `r_i` drops below `DOWNDATE_GUARD · r0_i` it is replaced by `exact(i)` and the
/// reference `r0_i` is reset to that value. Results are clamped at zero.
pub fn norm_downdate(r: &mut [f64], r0: &mut [f64], row: &[f64], mut exact: impl FnMut(usize) -> f64) {
    debug_assert_eq!(r.len(), row.len());
    debug_assert_eq!(r.len(), r0.len());
    for i in 0..r.len() {
        if row[i] == 0.0 {
            continue;
        }
        r[i] -= row[i] * row[i];
        if r[i] < DOWNDATE_GUARD * r0[i] {
            r[i] = exact(i);
            r0[i] = r[i];
        }
        if r[i] < 0.0 {
            r[i] = 0.0;
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Householder reflectors, leading `k` rows of `R` and the column permutation.
#[derive(Clone, Debug)]
pub struct PartialFactorization {
    pub wy: WyFactor,
    /// `k x n`, upper trapezoidal.
    pub r: DenseMatrix,
    pub perm: Permutation,
    pub k: usize,
}

impl PartialFactorization {
    pub fn q_thin(&self) -> DenseMatrix {
        self.wy.q_thin(self.k)
    }

    /// `‖(AΠ)(:, 0..k) − Q(:, 0..k) R(:, 0..k)‖_F`
    pub fn leading_residual(&self, a: &DenseMatrix) -> f64 {
        let ap = a.select_cols(&self.perm.as_slice()[..self.k]);
        let qr = self.q_thin().matmul(&self.r.leading_cols(self.k));
        ap.sub(&qr).norm_fro()
    }

    /// `Q_k R Πᵀ`, the rank-`k` approximation in original column order.
    pub fn approximation(&self) -> DenseMatrix {
        self.perm.unpermute_cols(&self.q_thin().matmul(&self.r))
    }

    /// `‖QᵀQ − I‖_F` over the full `m x m` `Q`.
    pub fn orthogonality_defect(&self) -> f64 {
        self.wy.q_full().orthogonality_defect()
    }
}

pub fn partial_qrcp(a: &DenseMatrix, k: usize) -> Result<PartialFactorization> {
    partial_qrcp_counted(a, k, &Flops::new())
}

pub fn partial_qrcp_counted(a: &DenseMatrix, k: usize, flops: &Flops) -> Result<PartialFactorization> {
    let (m, n) = a.shape();
    let kmax = m.min(n);
    if k == 0 || k > kmax {
        return Err(Error::RankOutOfRange { rank: k, max: kmax });
    }
    let mut w = a.clone();
    let mut perm = Permutation::identity(n);
    let mut r = w.col_norms_sq();
    let mut r0 = r.clone();
    let mut wy = WyFactor::new(m);
    flops.add(2 * m * n);

    for j in 0..k {
        let piv = j + argmax(&r[j..]);
        if piv != j {
            w.swap_cols(j, piv);
            r.swap(j, piv);
            r0.swap(j, piv);
            perm.swap(j, piv);
        }
        let h = householder_reflector(&w.col(j)[j..])?;
        flops.add(3 * (m - j));
        h.apply_to_cols(&mut w, j, j + 1..n, flops);
        w[(j, j)] = h.alpha;
        for i in j + 1..m {
            w[(i, j)] = 0.0;
        }
        wy.append_counted(&h.v, h.beta, flops)?;

        let row: Vec<f64> = (j + 1..n).map(|c| w[(j, c)]).collect();
        let wref = &w;
        norm_downdate(&mut r[j + 1..], &mut r0[j + 1..], &row, |i| norm_sq(&wref.col(j + 1 + i)[j + 1..]));
        r[j] = 0.0;
    }

    let rk = DenseMatrix::from_fn(k, n, |i, j| if i <= j { w[(i, j)] } else { 0.0 });
    Ok(PartialFactorization { wy, r: rk, perm, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;
    use proptest::prelude::*;

    #[test]
    fn identity_input() {
        let f = partial_qrcp(&DenseMatrix::identity(3), 3).unwrap();
        assert_eq!(f.perm.as_slice(), &[0, 1, 2]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((f.r[(i, j)].abs() - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pivots_largest_column_first() {
        let a = DenseMatrix::from_rows(&[[0.0, 2.0], [0.0, 1.0]]).unwrap();
        let f = partial_qrcp(&a, 1).unwrap();
        assert_eq!(f.perm.as_slice(), &[1, 0]);
        assert!((f.r[(0, 0)].abs() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]).unwrap();
        let f = partial_qrcp(&a, 1).unwrap();
        assert_eq!(f.perm.as_slice()[0], 0);
    }

    #[test]
    fn random_8x6_rank4_reconstructs() {
        let a = gaussian_matrix(8, 6, 5, 0);
        let f = partial_qrcp(&a, 4).unwrap();
        assert!(f.leading_residual(&a) <= 1e-12 * a.norm_fro());
    }

    #[test]
    fn rank_out_of_range() {
        let a = gaussian_matrix(4, 3, 1, 0);
        assert!(matches!(partial_qrcp(&a, 0), Err(Error::RankOutOfRange { .. })));
        assert!(matches!(partial_qrcp(&a, 4), Err(Error::RankOutOfRange { max: 3, .. })));
    }

    #[test]
    fn downdate_basic_cases() {
        let mut r = [25.0];
        let mut r0 = [25.0];
        norm_downdate(&mut r, &mut r0, &[3.0], |_| unreachable!());
        assert_eq!(r, [16.0]);
        norm_downdate(&mut r, &mut r0, &[0.0], |_| unreachable!());
        assert_eq!(r, [16.0]);
    }

    #[test]
    fn downdate_recomputes_on_cancellation() {
        // Column (1, 1e-8): after removing the leading entry the update is pure cancellation.
        let col = [1.0, 1e-8];
        let mut r = [col[0] * col[0] + col[1] * col[1]];
        let mut r0 = r;
        norm_downdate(&mut r, &mut r0, &[1.0], |_| col[1] * col[1]);
        assert_eq!(r[0], col[1] * col[1]);
        assert_eq!(r0[0], col[1] * col[1]);
    }

    #[test]
    fn downdate_matches_recompute_on_100x100() {
        let a = gaussian_matrix(100, 100, 9, 0);
        let mut w = a.clone();
        let mut r = w.col_norms_sq();
        let mut r0 = r.clone();
        for j in 0..60 {
            let h = householder_reflector(&w.col(j)[j..]).unwrap();
            h.apply_to_cols(&mut w, j, j + 1..100, &Flops::new());
            let row: Vec<f64> = (j + 1..100).map(|c| w[(j, c)]).collect();
            let wr = &w;
            norm_downdate(&mut r[j + 1..], &mut r0[j + 1..], &row, |i| norm_sq(&wr.col(j + 1 + i)[j + 1..]));
        }
        for c in 60..100 {
            let exact = norm_sq(&w.col(c)[60..]);
            assert!((r[c] - exact).abs() <= 1e-8 * exact, "col {c}: {} vs {}", r[c], exact);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn factorization_invariants(m in 2usize..40, n in 2usize..40, seed in any::<u64>(), frac in 0.1f64..1.0) {
            let a = gaussian_matrix(m, n, seed, 0);
            let k = ((m.min(n) as f64 * frac) as usize).max(1);
            let f = partial_qrcp(&a, k).unwrap();
            prop_assert!(Permutation::from_vec(f.perm.as_slice().to_vec()).is_ok());
            prop_assert!(f.orthogonality_defect() <= 1e-12 * (m as f64).sqrt());
            prop_assert!(f.leading_residual(&a) <= 1e-10 * a.norm_fro());
            for i in 1..k {
                prop_assert!(f.r[(i, i)].abs() <= f.r[(i - 1, i - 1)].abs() * (1.0 + 1e-12));
            }
        }
    }
}
