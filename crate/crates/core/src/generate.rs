//! Synthetic instances for the experiments and tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::householder::thin_qr;
use crate::ialm::ObservationSet;
use crate::math::{powf, sqrt};
use crate::matrix::DenseMatrix;
use crate::rng::{streams::GENERATOR_BASE, Stream};
use crate::tensor::DenseTensor;

/// `m x k` matrix with orthonormal columns: the Q factor of a Gaussian matrix.
pub fn random_orthonormal(m: usize, k: usize, seed: u64, stream: u64) -> DenseMatrix {
    assert!(k <= m, "random_orthonormal needs k <= m");
    let g = Stream::new(seed, stream).gaussian_matrix(m, k);
    thin_qr(&g, &Flops::new()).0
}

/// `U D Vᵀ + 0.1 σ_s(D) E`: `D` decays geometrically from 1 to 1e-3 over `s`
/// entries and `E` is standard Gaussian.
pub fn gen_type1(m: usize, n: usize, s: usize, seed: u64) -> DenseMatrix {
    assert!(s >= 1 && s <= m.min(n), "gen_type1 needs 1 <= s <= min(m, n)");
    let d = type1_diagonal(s);
    let u = random_orthonormal(m, s, seed, GENERATOR_BASE);
    let v = random_orthonormal(n, s, seed, GENERATOR_BASE + 1);
    let mut ud = u;
    for (j, &dj) in d.iter().enumerate() {
        ud.col_mut(j).iter_mut().for_each(|x| *x *= dj);
    }
    let mut a = ud.matmul_t(&v);
    let noise = 0.1 * d[s - 1];
    let mut st = Stream::new(seed, GENERATOR_BASE + 2);
    for x in a.as_mut_slice() {
        *x += noise * st.normal();
    }
    a
}

/// `D(i) = 10^(-3i/(s-1))`, `i = 0..s`.
pub fn type1_diagonal(s: usize) -> Vec<f64> {
    if s == 1 {
        return vec![1.0];
    }
    (0..s).map(|i| powf(10.0, -3.0 * i as f64 / (s - 1) as f64)).collect()
}

/// Upper-triangular Kahan matrix: `R(i, i) = sⁱ`, `R(i, j) = -c sⁱ` for `j > i`,
/// with `c = cos θ`, `s = sin θ`.
pub fn kahan(n: usize, theta: f64) -> DenseMatrix {
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let mut r = DenseMatrix::zeros(n, n);
    let mut si = 1.0;
    for i in 0..n {
        r[(i, i)] = si;
        for j in i + 1..n {
            r[(i, j)] = -c * si;
        }
        si *= s;
    }
    r
}

/// A robust PCA instance `(M, X*, E*)`: `X* = X_L X_Rᵀ` with Gaussian factors and
/// `E*` supported on `⌊sparsity·mn⌋` positions drawn without replacement, values
/// uniform on `[-500, 500]`.
pub fn gen_rpca_instance(
    m: usize,
    n: usize,
    rank: usize,
    sparsity: f64,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
    if rank > m.min(n) {
        return Err(Error::RankOutOfRange { rank, max: m.min(n) });
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::InvalidParameter("sparsity must lie in [0, 1]"));
    }
    let xl = Stream::new(seed, GENERATOR_BASE).gaussian_matrix(m, rank);
    let xr = Stream::new(seed, GENERATOR_BASE + 1).gaussian_matrix(n, rank);
    let x = xl.matmul_t(&xr);
    let nnz = libm::floor(sparsity * (m * n) as f64) as usize;
    let mut st = Stream::new(seed, GENERATOR_BASE + 2);
    let support = st.sample_without_replacement(m * n, nnz);
    let mut e = DenseMatrix::zeros(m, n);
    for &p in &support {
        e.as_mut_slice()[p] = st.uniform(-500.0, 500.0);
    }
    let mm = x.add(&e);
    Ok((mm, x, e))
}

/// Density of the sparse factor vectors in [`gen_sparse_tensor`].
pub const SPARSE_TENSOR_DENSITY: f64 = 0.05;

/// `Σ_j w_j x_j∘y_j∘z_j` over `j = 1..=n` with `w_j = 1000/j` for `j ≤ 10` and
/// `1/j` after. The vectors are sparse, nonnegative and never all zero.
pub fn gen_sparse_tensor(n: usize, seed: u64) -> Result<DenseTensor> {
    if n < 11 {
        return Err(Error::InvalidParameter("the sparse tensor needs n >= 11"));
    }
    let mut st = Stream::new(seed, GENERATOR_BASE);
    let mut t = DenseTensor::zeros(&[n, n, n]);
    let data = t.as_mut_slice();
    for j in 1..=n {
        let w = if j <= 10 { 1000.0 / j as f64 } else { 1.0 / j as f64 };
        let x = sparse_vector(&mut st, n);
        let y = sparse_vector(&mut st, n);
        let z = sparse_vector(&mut st, n);
        for (c, &zc) in z.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            for (b, &yb) in y.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                let f = w * zc * yb;
                let base = n * b + n * n * c;
                for (a, &xa) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                    data[base + a] += f * xa;
                }
            }
        }
    }
    Ok(t)
}

fn sparse_vector(st: &mut Stream, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let keep = st.uniform(0.0, 1.0) < SPARSE_TENSOR_DENSITY;
                let val = st.uniform(0.0, 1.0);
                if keep {
                    val
                } else {
                    0.0
                }
            })
            .collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

/// A completion instance: a rank-`rank` product of Gaussian factors scaled by
/// `1/√rank`, split into an observed set of `⌊fraction·mn⌋` uniformly chosen entries
/// and the held-out rest.
pub fn gen_completion_instance(
    m: usize,
    n: usize,
    rank: usize,
    fraction: f64,
    seed: u64,
) -> Result<(DenseMatrix, ObservationSet, ObservationSet)> {
    if rank == 0 || rank > m.min(n) {
        return Err(Error::RankOutOfRange { rank, max: m.min(n) });
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter("observed fraction must lie in (0, 1]"));
    }
    let xl = Stream::new(seed, GENERATOR_BASE).gaussian_matrix(m, rank);
    let xr = Stream::new(seed, GENERATOR_BASE + 1).gaussian_matrix(n, rank);
    let truth = xl.matmul_t(&xr).scaled(1.0 / sqrt(rank as f64));
    let k = (libm::floor(fraction * (m * n) as f64) as usize).max(1);
    let picked = Stream::new(seed, GENERATOR_BASE + 2).sample_without_replacement(m * n, k);
    let mut mask = vec![false; m * n];
    picked.iter().for_each(|&p| mask[p] = true);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    // Row-major walk keeps both lists sorted by (i, j).
    for i in 0..m {
        for j in 0..n {
            let entry = ((i, j), truth[(i, j)]);
            if mask[i + m * j] {
                train.push(entry)
            } else {
                test.push(entry)
            }
        }
    }
    let split = |v: Vec<((usize, usize), f64)>| {
        ObservationSet::new(v.iter().map(|e| e.0).collect(), v.iter().map(|e| e.1).collect(), (m, n))
    };
    Ok((truth, split(train)?, split(test).or_else(|_| ObservationSet::empty((m, n)))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::singular_values;

    #[test]
    fn type1_is_reproducible_and_scaled() {
        let a = gen_type1(100, 100, 1, 3);
        assert_eq!(a, gen_type1(100, 100, 1, 3));
        let s = singular_values(&a);
        // Rank one plus 0.1·N(0,1) noise whose spectral norm is about 0.1·2√100.
        assert!(s[0] > 0.9 && s[0] < 2.5, "{}", s[0]);
        assert_eq!(type1_diagonal(50)[49], 1e-3);
        assert_eq!(type1_diagonal(50)[0], 1.0);
    }

    #[test]
    fn kahan_entries() {
        let r = kahan(4, 1.2);
        let (s, c) = (1.2f64.sin(), 1.2f64.cos());
        assert!((r[(2, 2)] - s * s).abs() < 1e-15);
        assert!((r[(1, 3)] + c * s).abs() < 1e-15);
        assert_eq!(r[(3, 0)], 0.0);
    }

    #[test]
    fn rpca_instance_contract() {
        let (m, x, e) = gen_rpca_instance(40, 30, 4, 0.05, 1).unwrap();
        let nnz = e.as_slice().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nnz, 60);
        assert!(e.max_abs() <= 500.0);
        assert_eq!(m, x.add(&e));
        let (m0, x0, _) = gen_rpca_instance(40, 30, 4, 0.0, 1).unwrap();
        assert_eq!(m0, x0);
        let s = singular_values(&x0);
        assert!(s[4] <= 1e-12 * s[0]);
    }

    #[test]
    fn sparse_tensor_terms() {
        let t = gen_sparse_tensor(12, 9).unwrap();
        assert!(t.as_slice().iter().all(|v| *v >= 0.0));
        assert!(t.norm_fro() > 0.0);
        assert!(gen_sparse_tensor(10, 0).is_err());
    }

    #[test]
    fn completion_split_partitions_entries() {
        let (truth, train, test) = gen_completion_instance(20, 15, 2, 0.5, 4).unwrap();
        assert_eq!(train.len(), 150);
        assert_eq!(train.len() + test.len(), 300);
        for (&(i, j), &v) in train.indices().iter().zip(train.values()) {
            assert_eq!(truth[(i, j)], v);
        }
    }
}
