//! Rank-`k` approximate SVDs: Flip-Flop SRQR, randomized subspace iteration, and the
//! exact truncated SVD used as an oracle.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::householder::{qr_nopivot, thin_qr};
use crate::math::axpy;
use crate::matrix::DenseMatrix;
use crate::rng::{gaussian_matrix, streams};
use crate::sketch::SketchParams;
use crate::srqr::{srqr_counted, SrqrResult};
use crate::svd::svd_counted;

/// `A ≈ U diag(sigma) Vᵀ` with `k` columns.
#[derive(Clone, Debug)]
pub struct ApproxSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    pub k: usize,
}

impl ApproxSvd {
    /// `U diag(sigma) Vᵀ`
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        us.matmul_t(&self.v)
    }

    /// `‖A − U Σ Vᵀ‖_F`
    pub fn residual_fro(&self, a: &DenseMatrix) -> f64 {
        a.sub(&self.reconstruct()).norm_fro()
    }

    /// `‖A − U Σ Vᵀ‖_F / ‖A‖_F`, or 0 for `A = 0` approximated exactly.
    pub fn relative_error(&self, a: &DenseMatrix) -> f64 {
        let na = a.norm_fro();
        let r = self.residual_fro(a);
        if na == 0.0 {
            r
        } else {
            r / na
        }
    }
}

/// Flip-Flop SRQR with `params.l` SRQR steps, truncated to `params.k`.
pub fn flip_flop_srqr(a: &DenseMatrix, params: &SketchParams) -> Result<ApproxSvd> {
    Ok(flip_flop_srqr_detailed(a, params, &Flops::new())?.0)
}

pub fn flip_flop_srqr_counted(a: &DenseMatrix, params: &SketchParams, flops: &Flops) -> Result<ApproxSvd> {
    Ok(flip_flop_srqr_detailed(a, params, flops)?.0)
}

/// Also returns the SRQR factorization the SVD was built from.
pub fn flip_flop_srqr_detailed(
    a: &DenseMatrix,
    params: &SketchParams,
    flops: &Flops,
) -> Result<(ApproxSvd, SrqrResult)> {
    let (m, n) = a.shape();
    if params.k > params.l {
        return Err(Error::InvalidParameter("need k <= l"));
    }
    let res = srqr_counted(a, params, flops)?;
    let l = params.l;
    let k = params.k;
    let perm = res.fact.perm.as_slice();

    // Rᵀ = Q̂ R̂; Q̂₁ stays in WY form.
    let (qh, _) = qr_nopivot(&res.fact.r.transpose(), flops);
    let yh = qh.y();

    // tmp = AΠ Q̂₁ = AΠ(:, 0..l) − (AΠŶ)(T̂ Ŷ₁ᵀ)
    let mut apy = DenseMatrix::zeros(m, l);
    for (c, &src) in perm.iter().enumerate() {
        let acol = a.col(src);
        for i in 0..l.min(c + 1) {
            let y = yh[(c, i)];
            if y != 0.0 {
                axpy(y, acol, apy.col_mut(i));
            }
        }
    }
    flops.add((0..l).map(|i| 2 * m * (n - i)).sum());
    let ty1 = qh.t().matmul_t(&yh.submatrix(0..l, 0..l));
    let mut tmp = a.select_cols(&perm[..l]);
    crate::matrix::gemm_acc(-1.0, &apy, &ty1, &mut tmp, flops);

    let d = svd_counted(&tmp, flops);
    let u = d.u.leading_cols(k);
    let sigma = d.s[..k].to_vec();

    // V = Π Q̂₁ V_tmp(:, 0..k)
    let mut vh = DenseMatrix::zeros(n, k);
    vh.set_block(0, 0, &d.v.leading_cols(k));
    qh.apply_q_mat(&mut vh, flops);
    let mut v = DenseMatrix::zeros(n, k);
    for (c, &src) in perm.iter().enumerate() {
        for j in 0..k {
            v[(src, j)] = vh[(c, j)];
        }
    }
    Ok((ApproxSvd { u, sigma, v, k }, res))
}

/// Randomized subspace iteration SVD with `q` power iterations.
pub fn rsisvd(a: &DenseMatrix, k: usize, p: usize, q: usize, seed: u64) -> Result<ApproxSvd> {
    rsisvd_counted(a, k, p, q, seed, &Flops::new())
}

pub fn rsisvd_counted(a: &DenseMatrix, k: usize, p: usize, q: usize, seed: u64, flops: &Flops) -> Result<ApproxSvd> {
    let (m, n) = a.shape();
    let kp = k + p;
    if k == 0 || kp > m.min(n) {
        return Err(Error::RankOutOfRange { rank: kp, max: m.min(n) });
    }
    a.check_finite()?;
    let omega = gaussian_matrix(n, kp, seed, streams::RSISVD);
    let mut qm = thin_qr(&a.matmul_counted(&omega, flops), flops).0;
    for _ in 0..q {
        let qt = thin_qr(&a.t_matmul_counted(&qm, flops), flops).0;
        qm = thin_qr(&a.matmul_counted(&qt, flops), flops).0;
    }
    let b = qm.t_matmul_counted(a, flops);
    let d = svd_counted(&b, flops);
    let u = qm.matmul_counted(&d.u.leading_cols(k), flops);
    Ok(ApproxSvd { u, sigma: d.s[..k].to_vec(), v: d.v.leading_cols(k), k })
}

/// Exact rank-`k` truncation from a dense SVD. Test-scale only: `min(m, n) ≤ 2000`.
pub fn truncated_svd_oracle(a: &DenseMatrix, k: usize) -> Result<ApproxSvd> {
    let (m, n) = a.shape();
    let p = m.min(n);
    if p > 2000 {
        return Err(Error::OracleTooLarge(p));
    }
    if k == 0 || k > p {
        return Err(Error::RankOutOfRange { rank: k, max: p });
    }
    let d = crate::svd::svd(a);
    Ok(ApproxSvd { u: d.u.leading_cols(k), sigma: d.s[..k].to_vec(), v: d.v.leading_cols(k), k })
}

/// Operation selector for [`flop_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlopOp {
    FlipFlop(SketchParams),
    Rsisvd { k: usize, p: usize, q: usize },
    Trqrcp(SketchParams),
    Matmul { r: usize },
}

/// Runs `op` on an `m x n` Gaussian matrix and returns the counted flops.
pub fn flop_report(op: FlopOp, m: usize, n: usize, seed: u64) -> Result<u64> {
    let a = gaussian_matrix(m, n, seed, streams::GENERATOR_BASE);
    let flops = Flops::new();
    match op {
        FlopOp::FlipFlop(p) => {
            flip_flop_srqr_counted(&a, &p, &flops)?;
        }
        FlopOp::Rsisvd { k, p, q } => {
            rsisvd_counted(&a, k, p, q, seed, &flops)?;
        }
        FlopOp::Trqrcp(p) => {
            crate::sketch::trqrcp_counted(&a, &p, &flops)?;
        }
        FlopOp::Matmul { r } => {
            let b = gaussian_matrix(n, r, seed, streams::GENERATOR_BASE + 1);
            a.matmul_counted(&b, &flops);
        }
    }
    Ok(flops.get())
}

/// `4mnl + 2(b+p)mn`
pub fn flip_flop_flop_model(m: usize, n: usize, params: &SketchParams) -> f64 {
    let (m, n) = (m as f64, n as f64);
    4.0 * m * n * params.l as f64 + 2.0 * params.sketch_rows() as f64 * m * n
}

/// `(4q + 4) mn(k + p)`
pub fn rsisvd_flop_model(m: usize, n: usize, k: usize, p: usize, q: usize) -> f64 {
    (4.0 * q as f64 + 4.0) * (m * n) as f64 * (k + p) as f64
}
