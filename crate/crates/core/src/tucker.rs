//! Tucker decompositions by HOSVD and sequentially truncated HOSVD.

use alloc::boxed::Box;
use alloc::vec::Vec;

pub use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::matrix::DenseMatrix;
use crate::tensor::DenseTensor;

/// Element count above which [`tucker_error`] uses the norm identity instead of
/// rebuilding the approximation.
pub const DIRECT_ERROR_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct TuckerDecomp {
    pub core: DenseTensor,
    pub factors: Vec<DenseMatrix>,
}

impl TuckerDecomp {
    /// `𝒢 ×₀ U₀ ⋯ ×_{d-1} U_{d-1}`
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut t = self.core.clone();
        for (n, u) in self.factors.iter().enumerate() {
            t = t.nmode_product(u, n)?;
        }
        Ok(t)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|u| u.cols()).collect()
    }

    pub fn max_orthogonality_defect(&self) -> f64 {
        self.factors.iter().map(|u| u.orthogonality_defect()).fold(0.0, f64::max)
    }
}

fn check_ranks(x: &DenseTensor, ranks: &[usize]) -> Result<()> {
    if ranks.len() != x.order() {
        return Err(Error::Dimension("one rank per mode is required"));
    }
    for (&k, &d) in ranks.iter().zip(x.dims()) {
        if k == 0 || k > d {
            return Err(Error::RankOutOfRange { rank: k, max: d });
        }
    }
    Ok(())
}

fn with_mode<T>(mode: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Mode { mode, source: Box::new(e) })
}

fn leading_factor(g: &DenseTensor, n: usize, k: usize, engine: &Engine) -> Result<DenseMatrix> {
    let unf = g.unfold(n)?;
    if unf.cols() < k {
        // Fewer columns than the rank: pad the unfolding's column space with
        // an orthonormal complement from the full left basis.
        let d = crate::svd::svd(&unf);
        return Ok(complete_basis(&d.u, d.s.len(), k));
    }
    let s = with_mode(n, engine.truncated(&unf, k, n as u64))?;
    Ok(s.u)
}

/// First `k` columns of an orthonormal basis that starts with `u(:, 0..r)`.
fn complete_basis(u: &DenseMatrix, r: usize, k: usize) -> DenseMatrix {
    let m = u.rows();
    let mut ext = DenseMatrix::zeros(m, r + m);
    ext.set_block(0, 0, &u.leading_cols(r));
    ext.set_block(0, r, &DenseMatrix::identity(m));
    let (q, _) = crate::householder::thin_qr(&ext, &crate::flops::Flops::new());
    // Thin QR keeps the span of the leading columns; fix signs to match `u`.
    let mut q = q.leading_cols(k);
    for j in 0..r.min(k) {
        let d = crate::math::dot(q.col(j), u.col(j));
        if d < 0.0 {
            q.col_mut(j).iter_mut().for_each(|v| *v = -*v);
        }
    }
    q
}

/// HOSVD: each factor comes from its own unfolding of `x`, then the core is
/// `x ×₀ U₀ᵀ ⋯`.
pub fn hosvd(x: &DenseTensor, ranks: &[usize], engine: &Engine) -> Result<TuckerDecomp> {
    check_ranks(x, ranks)?;
    let mut factors = Vec::with_capacity(ranks.len());
    for (n, &k) in ranks.iter().enumerate() {
        factors.push(leading_factor(x, n, k, engine)?);
    }
    let mut core = x.clone();
    for (n, u) in factors.iter().enumerate() {
        core = core.nmode_product_t(u, n)?;
    }
    Ok(TuckerDecomp { core, factors })
}

/// Modes sorted by increasing dimension, ties by index.
pub fn default_order(dims: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dims.len()).collect();
    order.sort_by_key(|&n| (dims[n], n));
    order
}

/// ST-HOSVD: modes are processed in `order` (default: [`default_order`]), each
/// factor computed from the already truncated core, which is then projected onto it.
pub fn st_hosvd(x: &DenseTensor, ranks: &[usize], order: Option<&[usize]>, engine: &Engine) -> Result<TuckerDecomp> {
    check_ranks(x, ranks)?;
    let d = x.order();
    let order = match order {
        Some(o) => {
            let mut seen = alloc::vec![false; d];
            if o.len() != d || o.iter().any(|&n| n >= d || core::mem::replace(&mut seen[n], true)) {
                return Err(Error::InvalidParameter("order must be a permutation of the modes"));
            }
            o.to_vec()
        }
        None => default_order(x.dims()),
    };
    let mut factors: Vec<Option<DenseMatrix>> = (0..d).map(|_| None).collect();
    let mut core = x.clone();
    for &n in &order {
        let u = leading_factor(&core, n, ranks[n], engine)?;
        core = core.nmode_product_t(&u, n)?;
        factors[n] = Some(u);
    }
    Ok(TuckerDecomp { core, factors: factors.into_iter().map(|f| f.expect("every mode processed")).collect() })
}

fn check_compatible(x: &DenseTensor, t: &TuckerDecomp) -> Result<()> {
    if t.factors.len() != x.order() || t.core.order() != x.order() {
        return Err(Error::Dimension("decomposition order differs from the tensor"));
    }
    for (n, u) in t.factors.iter().enumerate() {
        if u.rows() != x.dims()[n] || u.cols() != t.core.dims()[n] {
            return Err(Error::Dimension("factor shape incompatible with tensor or core"));
        }
    }
    Ok(())
}

fn relative(err: f64, x: &DenseTensor) -> f64 {
    let nx = x.norm_fro();
    if nx == 0.0 {
        if err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        err / nx
    }
}

/// `‖X − X_k‖_F / ‖X‖_F` by explicit reconstruction.
pub fn tucker_error_direct(x: &DenseTensor, t: &TuckerDecomp) -> Result<f64> {
    check_compatible(x, t)?;
    let xk = t.reconstruct()?;
    Ok(relative(x.sub(&xk)?.norm_fro(), x))
}

/// Same quantity via `‖X − X_k‖² = ‖X‖² − ‖𝒢‖²`, valid when the factors are
/// orthonormal and the core is the projection of `X`.
pub fn tucker_error_identity(x: &DenseTensor, t: &TuckerDecomp) -> Result<f64> {
    check_compatible(x, t)?;
    let nx = x.norm_fro();
    let ng = t.core.norm_fro();
    Ok(relative(sqrt((nx * nx - ng * ng).max(0.0)), x))
}

/// Relative Frobenius error of `t` against `x`. Large tensors with orthonormal
/// factors use the norm identity; everything else is reconstructed.
pub fn tucker_error(x: &DenseTensor, t: &TuckerDecomp) -> Result<f64> {
    check_compatible(x, t)?;
    let orthonormal = t.factors.iter().all(|u| u.orthogonality_defect() <= 1e-10 * sqrt(u.cols() as f64));
    if x.len() > DIRECT_ERROR_LIMIT && orthonormal {
        tucker_error_identity(x, t)
    } else {
        tucker_error_direct(x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random(dims: &[usize], seed: u64) -> DenseTensor {
        let mut s = Stream::new(seed, 0);
        DenseTensor::from_fn(dims, |_| s.normal())
    }

    #[test]
    fn full_rank_is_exact() {
        let x = random(&[4, 3, 5], 1);
        let ranks = x.dims().to_vec();
        let h = hosvd(&x, &ranks, &Engine::Exact).unwrap();
        assert!(tucker_error(&x, &h).unwrap() <= 1e-10);
        for order in [[0, 1, 2], [2, 0, 1]] {
            let s = st_hosvd(&x, &ranks, Some(&order), &Engine::Exact).unwrap();
            assert!(tucker_error(&x, &s).unwrap() <= 1e-10);
            assert!((s.core.norm_fro() - x.norm_fro()).abs() <= 1e-10 * x.norm_fro());
        }
    }

    #[test]
    fn rank_one_recovery() {
        let a = [1.0, -2.0, 0.5];
        let b = [3.0, 1.0];
        let c = [2.0, 0.0, 1.0, -1.0];
        let x = DenseTensor::from_fn(&[3, 2, 4], |i| a[i[0]] * b[i[1]] * c[i[2]]);
        let t = hosvd(&x, &[1, 1, 1], &Engine::Exact).unwrap();
        let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nc: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((t.core.as_slice()[0].abs() - na * nb * nc).abs() <= 1e-12 * na * nb * nc);
        assert!(tucker_error(&x, &t).unwrap() <= 1e-12);
    }

    #[test]
    fn hosvd_matches_explicit_projection() {
        let x = random(&[10, 10, 10], 2);
        let t = hosvd(&x, &[5, 5, 5], &Engine::Exact).unwrap();
        let mut p = x.clone();
        for n in 0..3 {
            let d = crate::svd::svd(&x.unfold(n).unwrap());
            let u = d.u.leading_cols(5);
            let proj = u.matmul(&u.transpose());
            p = p.nmode_product(&proj, n).unwrap();
        }
        let want = x.sub(&p).unwrap().norm_fro() / x.norm_fro();
        assert!((tucker_error(&x, &t).unwrap() - want).abs() <= 1e-10);
    }

    #[test]
    fn st_hosvd_close_to_hosvd() {
        let x = random(&[12, 10, 8], 3);
        let h = hosvd(&x, &[4, 4, 4], &Engine::Exact).unwrap();
        let s = st_hosvd(&x, &[4, 4, 4], None, &Engine::Exact).unwrap();
        assert!(tucker_error(&x, &s).unwrap() <= 1.05 * tucker_error(&x, &h).unwrap());
        assert!(s.max_orthogonality_defect() <= 1e-10 * 2.0);
        assert!(s.core.norm_fro() <= x.norm_fro() + 1e-10);
    }

    #[test]
    fn error_paths_agree() {
        let x = random(&[7, 6, 5], 4);
        let t = st_hosvd(&x, &[3, 2, 4], None, &Engine::Exact).unwrap();
        let a = tucker_error_direct(&x, &t).unwrap();
        let b = tucker_error_identity(&x, &t).unwrap();
        assert!((a - b).abs() <= 1e-8);
    }

    #[test]
    fn zero_core_has_unit_error() {
        let x = random(&[3, 3, 3], 5);
        let mut t = hosvd(&x, &[2, 2, 2], &Engine::Exact).unwrap();
        t.core = DenseTensor::zeros(&[2, 2, 2]);
        assert!((tucker_error(&x, &t).unwrap() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn rank_exceeding_unfolding_columns() {
        // Mode 0 has 6 rows but the other modes only give 4 columns.
        let x = random(&[6, 2, 2], 6);
        let t = st_hosvd(&x, &[6, 2, 2], Some(&[1, 2, 0]), &Engine::Exact).unwrap();
        assert!(tucker_error(&x, &t).unwrap() <= 1e-10);
        assert!(t.factors[0].orthogonality_defect() <= 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = random(&[3, 3], 7);
        assert!(hosvd(&x, &[4, 1], &Engine::Exact).is_err());
        assert!(hosvd(&x, &[1], &Engine::Exact).is_err());
        assert!(st_hosvd(&x, &[1, 1], Some(&[0, 0]), &Engine::Exact).is_err());
        assert_eq!(default_order(&[5, 2, 5, 1]), alloc::vec![3, 1, 0, 2]);
    }
}
