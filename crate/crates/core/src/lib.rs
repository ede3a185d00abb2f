//! Dense low-rank approximation kernels built around Flip-Flop spectrum-revealing QR.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`householder`], [`givens`], [`qrcp`]: Householder reflectors in compact WY form,
//!   Givens re-triangularization and the deterministic partial QRCP;
//! - [`sketch`]: randomized QRCP on a Gaussian sketch, with and without trailing updates;
//! - [`srqr`]: spectrum-revealing QR with randomized `g2` certification and pair-wise swaps;
//! - [`flipflop`]: the Flip-Flop SRQR approximate SVD, randomized subspace iteration SVD,
//!   the exact truncated SVD oracle and flop accounting;
//! - [`bounds`]: checkers for the singular value and residual bounds of Flip-Flop SRQR;
//! - [`tensor`], [`tucker`]: dense tensors, unfoldings, mode products, HOSVD and ST-HOSVD;
//! - [`ialm`]: inexact augmented Lagrange multiplier solvers for robust PCA and completion;
//! - [`generate`]: the synthetic test instances used by the experiments.
//!
//! Matrices are column-major [`DenseMatrix`] values. All randomness comes from a
//! counter-based generator keyed by a 64-bit seed, so every routine is deterministic
//! for a fixed seed.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod engine;
pub mod error;
pub mod flipflop;
pub mod flops;
pub mod generate;
pub mod givens;
pub mod householder;
pub mod ialm;
pub mod matrix;
pub mod qrcp;
pub mod rng;
pub mod sketch;
pub mod srqr;
pub mod svd;
pub mod tensor;
pub mod tucker;

mod math;

pub use error::{Error, Result};
pub use flipflop::{flip_flop_srqr, rsisvd, truncated_svd_oracle, ApproxSvd};
pub use flops::Flops;
pub use matrix::DenseMatrix;
pub use qrcp::{partial_qrcp, PartialFactorization, Permutation};
pub use sketch::{rqrcp, trqrcp, SketchParams};
pub use srqr::{srqr, SrqrCertificate, SrqrResult};
pub use tensor::DenseTensor;
pub use tucker::{hosvd, st_hosvd, Engine, TuckerDecomp};
