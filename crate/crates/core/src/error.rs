use alloc::boxed::Box;

use crate::srqr::SrqrResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("sketch does not compress: b + p = {rows} exceeds m = {m}")]
    SketchTooLarge { rows: usize, m: usize },

    #[error("trailing triangular block is singular at diagonal {index}")]
    SingularTrailingBlock { index: usize },

    /// The swap loop hit its cap. Carries the iterate with the smallest `g2` seen.
    #[error("spectrum-revealing certification failed after {swaps} swaps")]
    CertificationFailed { swaps: usize, best: Box<SrqrResult> },

    #[error("input has {0} entries that are NaN or infinite")]
    NonFinite(usize),

    #[error("input too large for the dense oracle: min(m, n) = {0} > 2000")]
    OracleTooLarge(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// A per-mode SVD inside a Tucker routine failed.
    #[error("mode {mode}: {source}")]
    Mode {
        mode: usize,
        #[source]
        source: Box<Error>,
    },
}
