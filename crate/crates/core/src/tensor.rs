//! Dense tensors stored first-index-fastest, with mode unfoldings and mode products.
//!
//! Modes are 0-based. The mode-`n` unfolding `X₍ₙ₎` is `I_n x Π_{j≠n} I_j`; its columns
//! enumerate the remaining indices with lower-numbered modes varying fastest, so
//! entry `(i, l + L·r)` is `data[l + L·i + L·I_n·r]` where `L = Π_{j<n} I_j`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::math::{axpy, norm_sq, sqrt};
use crate::matrix::DenseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Empty("a tensor needs at least one mode"));
        }
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::Dimension("data length must equal the product of dims"));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self { dims: dims.to_vec(), data: vec![0.0; dims.iter().product()] }
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let total: usize = dims.iter().product();
        let mut idx = vec![0; dims.len()];
        let mut data = Vec::with_capacity(total);
        for _ in 0..total {
            data.push(f(&idx));
            for (d, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < dims[d] {
                    break;
                }
                *i = 0;
            }
        }
        Self { dims: dims.to_vec(), data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        let mut stride = 1;
        for (&i, &d) in idx.iter().zip(&self.dims) {
            debug_assert!(i < d);
            off += i * stride;
            stride *= d;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn norm_fro(&self) -> f64 {
        sqrt(norm_sq(&self.data))
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.dims != other.dims {
            return Err(Error::Dimension("tensor shapes differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dims: self.dims.clone(), data })
    }

    fn check_mode(&self, n: usize) -> Result<()> {
        if n >= self.dims.len() {
            return Err(Error::InvalidParameter("mode index out of range"));
        }
        Ok(())
    }

    /// `(L, I_n, R)`: products of the dimensions before, at and after mode `n`.
    fn split(&self, n: usize) -> (usize, usize, usize) {
        let left = self.dims[..n].iter().product();
        let right = self.dims[n + 1..].iter().product();
        (left, self.dims[n], right)
    }

    /// Mode-`n` unfolding `X₍ₙ₎`.
    pub fn unfold(&self, n: usize) -> Result<DenseMatrix> {
        self.check_mode(n)?;
        let (left, dn, right) = self.split(n);
        let mut m = DenseMatrix::zeros(dn, left * right);
        for r in 0..right {
            for i in 0..dn {
                let src = &self.data[left * i + left * dn * r..][..left];
                for (l, &v) in src.iter().enumerate() {
                    m[(i, l + left * r)] = v;
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &DenseMatrix, n: usize, dims: &[usize]) -> Result<DenseTensor> {
        let mut t = DenseTensor::zeros(dims);
        t.check_mode(n)?;
        let (left, dn, right) = t.split(n);
        if m.rows() != dn || m.cols() != left * right {
            return Err(Error::Dimension("matrix shape does not match dims for this mode"));
        }
        for r in 0..right {
            for i in 0..dn {
                let dst = &mut t.data[left * i + left * dn * r..][..left];
                for (l, v) in dst.iter_mut().enumerate() {
                    *v = m[(i, l + left * r)];
                }
            }
        }
        Ok(t)
    }

    /// `X ×ₙ U`: replaces dimension `I_n` by `U.rows()`, with `(X ×ₙ U)₍ₙ₎ = U X₍ₙ₎`.
    pub fn nmode_product(&self, u: &DenseMatrix, n: usize) -> Result<DenseTensor> {
        self.nmode_product_counted(u, n, &Flops::new())
    }

    pub fn nmode_product_counted(&self, u: &DenseMatrix, n: usize, flops: &Flops) -> Result<DenseTensor> {
        self.check_mode(n)?;
        let (left, dn, right) = self.split(n);
        if u.cols() != dn {
            return Err(Error::Dimension("U must have I_n columns"));
        }
        let jn = u.rows();
        let mut dims = self.dims.clone();
        dims[n] = jn;
        let mut out = vec![0.0; left * jn * right];
        for r in 0..right {
            for i in 0..dn {
                let src = &self.data[left * i + left * dn * r..][..left];
                for j in 0..jn {
                    let c = u[(j, i)];
                    if c != 0.0 {
                        axpy(c, src, &mut out[left * j + left * jn * r..][..left]);
                    }
                }
            }
        }
        flops.add(2 * left * dn * jn * right);
        Ok(DenseTensor { dims, data: out })
    }

    /// `X ×ₙ Uᵀ`.
    pub fn nmode_product_t(&self, u: &DenseMatrix, n: usize) -> Result<DenseTensor> {
        self.nmode_product(&u.transpose(), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn counting(dims: &[usize]) -> DenseTensor {
        let n: usize = dims.iter().product();
        DenseTensor::new(dims.to_vec(), (1..=n).map(|x| x as f64).collect()).unwrap()
    }

    fn random(dims: &[usize], seed: u64) -> DenseTensor {
        let mut s = Stream::new(seed, 0);
        DenseTensor::from_fn(dims, |_| s.normal())
    }

    #[test]
    fn unfold_layout() {
        let x = counting(&[2, 2, 2]);
        let m = x.unfold(0).unwrap();
        assert_eq!(m.shape(), (2, 4));
        assert_eq!(m.col(0), &[1.0, 2.0]);
        assert_eq!(m.col(1), &[3.0, 4.0]);
        let m1 = x.unfold(1).unwrap();
        assert_eq!(m1.col(0), &[1.0, 3.0]);
        assert_eq!(m1.col(1), &[2.0, 4.0]);
        assert_eq!(m1.col(2), &[5.0, 7.0]);
        let m2 = x.unfold(2).unwrap();
        assert_eq!(m2.col(0), &[1.0, 5.0]);
        assert!(x.unfold(3).is_err());
    }

    #[test]
    fn vector_unfolds_to_column() {
        let x = counting(&[4]);
        let m = x.unfold(0).unwrap();
        assert_eq!(m.shape(), (4, 1));
        assert_eq!(m.col(0), x.as_slice());
    }

    #[test]
    fn fold_row_tensor() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let t = DenseTensor::fold(&m, 0, &[1, 3]).unwrap();
        assert_eq!(t.dims(), &[1, 3]);
        assert_eq!(t.as_slice(), &[1.0, 2.0, 3.0]);
        assert!(DenseTensor::fold(&m, 0, &[1, 4]).is_err());
    }

    #[test]
    fn sum_over_mode() {
        let x = DenseTensor::new(vec![2, 2, 2], vec![1.0; 8]).unwrap();
        let u = DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let y = x.nmode_product(&u, 0).unwrap();
        assert_eq!(y.dims(), &[1, 2, 2]);
        assert!(y.as_slice().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn identity_product_is_noop() {
        let x = random(&[3, 4, 5], 1);
        for n in 0..3 {
            let y = x.nmode_product(&DenseMatrix::identity(x.dims()[n]), n).unwrap();
            assert_eq!(y, x);
        }
    }

    #[test]
    fn products_on_distinct_modes_commute() {
        let x = random(&[3, 4, 5], 2);
        let u = crate::rng::gaussian_matrix(2, 3, 3, 0);
        let v = crate::rng::gaussian_matrix(6, 4, 3, 1);
        let a = x.nmode_product(&u, 0).unwrap().nmode_product(&v, 1).unwrap();
        let b = x.nmode_product(&v, 1).unwrap().nmode_product(&u, 0).unwrap();
        assert!(a.sub(&b).unwrap().norm_fro() <= 1e-12 * a.norm_fro());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn unfold_fold_and_product_identities(
            dims in proptest::collection::vec(1usize..6, 1..5),
            rows in 1usize..5,
            seed in any::<u64>(),
        ) {
            let x = random(&dims, seed);
            for n in 0..dims.len() {
                let m = x.unfold(n).unwrap();
                let back = DenseTensor::fold(&m, n, &dims).unwrap();
                prop_assert_eq!(&back, &x);
                prop_assert_eq!(back.norm_fro(), x.norm_fro());
                prop_assert!((m.norm_fro() - x.norm_fro()).abs() <= 1e-14 * x.norm_fro());
                let u = crate::rng::gaussian_matrix(rows, dims[n], seed ^ 7, n as u64);
                let y = x.nmode_product(&u, n).unwrap();
                let want = u.matmul(&m);
                let got = y.unfold(n).unwrap();
                prop_assert!(got.sub(&want).norm_fro() <= 1e-12 * want.norm_fro().max(1.0));
            }
        }
    }
}
