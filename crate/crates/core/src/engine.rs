//! Truncated SVD engines shared by the Tucker and IALM drivers.

use crate::error::Result;
use crate::flipflop::{flip_flop_srqr, rsisvd, ApproxSvd};
use crate::matrix::DenseMatrix;
use crate::sketch::SketchParams;
use crate::svd::svd;

/// How a rank-`k` truncated SVD is computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Engine {
    /// Dense SVD, truncated.
    Exact,
    /// Flip-Flop SRQR with `l = k + oversample`.
    FlipFlop { oversample: usize, b: usize, p: usize, g: f64, epsilon: f64, seed: u64 },
    /// Randomized subspace iteration.
    Rsisvd { p: usize, q: usize, seed: u64 },
}

impl Engine {
    /// Flip-Flop with the library defaults and `l = k`.
    pub fn flip_flop(seed: u64) -> Self {
        Engine::FlipFlop { oversample: 0, b: 32, p: 5, g: 2.0, epsilon: 0.5, seed }
    }

    pub fn rsisvd(seed: u64) -> Self {
        Engine::Rsisvd { p: 5, q: 1, seed }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::FlipFlop { .. } => "flipflop",
            Engine::Rsisvd { .. } => "rsisvd",
        }
    }

    /// Rank-`k` approximate SVD of `a`. `call` distinguishes repeated calls so that
    /// each one draws from its own random stream.
    ///
    /// Randomized engines shrink their block and oversampling sizes to fit small
    /// inputs and fall back to the dense SVD when the requested rank leaves no room.
    pub fn truncated(&self, a: &DenseMatrix, k: usize, call: u64) -> Result<ApproxSvd> {
        let (m, n) = a.shape();
        let kmax = m.min(n);
        let k = k.clamp(1, kmax.max(1));
        match *self {
            Engine::Exact => exact(a, k),
            Engine::FlipFlop { oversample, b, p, g, epsilon, seed } => {
                let l = (k + oversample).min(kmax.saturating_sub(1));
                if l < k {
                    return exact(a, k);
                }
                let b = b.min(l);
                let p = p.min(m - b);
                let mut params = SketchParams::new(k).with_l(l).with_block(b, p).with_seed(seed.wrapping_add(call));
                params.g = g;
                params.epsilon = epsilon;
                flip_flop_srqr(a, &params)
            }
            Engine::Rsisvd { p, q, seed } => {
                if k >= kmax {
                    return exact(a, k);
                }
                rsisvd(a, k, p.min(kmax - k), q, seed.wrapping_add(call))
            }
        }
    }
}

fn exact(a: &DenseMatrix, k: usize) -> Result<ApproxSvd> {
    let d = svd(a);
    let k = k.min(d.s.len());
    Ok(ApproxSvd { u: d.u.leading_cols(k), sigma: d.s[..k].to_vec(), v: d.v.leading_cols(k), k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;

    #[test]
    fn small_inputs_fall_back_or_clamp() {
        let a = gaussian_matrix(6, 40, 1, 0);
        for e in [Engine::Exact, Engine::flip_flop(0), Engine::rsisvd(0)] {
            for k in [1, 3, 5, 6] {
                let s = e.truncated(&a, k, 0).unwrap();
                assert_eq!(s.k, k);
                assert_eq!(s.u.shape(), (6, k));
                assert_eq!(s.v.shape(), (40, k));
            }
        }
    }
}
