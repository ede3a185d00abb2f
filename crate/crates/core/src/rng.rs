//! Counter-based Gaussian streams.
//!
//! A stream is identified by `(seed, stream)`: the ChaCha key comes from the seed and
//! the ChaCha stream id from `stream`, so independent consumers (sketch matrix, one
//! `g2` estimate per swap iteration, generator factors) never share draws and
//! two runs with the same seed consume identical sequences.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::matrix::DenseMatrix;

/// Stream ids reserved by the library. Generators use `GENERATOR_BASE + k`.
pub mod streams {
    pub const SKETCH: u64 = 0;
    pub const RSISVD: u64 = 1;
    pub const G2_BASE: u64 = 1 << 20;
    pub const GENERATOR_BASE: u64 = 1 << 40;
}

#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha12Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        Uniform::new(lo, hi).expect("uniform bounds must be finite and ordered").sample(&mut self.rng)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        Uniform::new(0, n).expect("n > 0").sample(&mut self.rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// `rows x cols` matrix of i.i.d. N(0, 1) entries, filled column by column.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.normal()).collect();
        DenseMatrix::from_col_major(rows, cols, data).expect("length matches")
    }

    /// `k` distinct indices from `0..n`, sorted (partial Fisher-Yates).
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64, stream: u64) -> DenseMatrix {
    Stream::new(seed, stream).gaussian_matrix(rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = gaussian_matrix(4, 3, 7, 0);
        let b = gaussian_matrix(4, 3, 7, 0);
        let c = gaussian_matrix(4, 3, 7, 1);
        assert_eq!(a.as_slice(), b.as_slice());
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn normal_moments() {
        let mut s = Stream::new(1, 2);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn sampling_without_replacement_is_distinct() {
        let mut s = Stream::new(3, 0);
        let idx = s.sample_without_replacement(100, 40);
        assert_eq!(idx.len(), 40);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx.iter().all(|&i| i < 100));
    }
}
