//! Randomized QRCP on a Gaussian sketch `B = ΩA`.
//!
//! Pivots for each block of `b` columns come from a partial QRCP of the current sketch.
//! [`rqrcp`] keeps an explicitly updated trailing matrix. [`trqrcp`] never touches the
//! trailing matrix: it accumulates `Wᵀ = TᵀYᵀAΠ` and forms only the `R` rows it needs.
//! Both consume the same random stream and take the same pivots.

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::householder::{householder_reflector, WyFactor};
use crate::math::dot;
use crate::matrix::{gemm_acc, DenseMatrix};
use crate::qrcp::{partial_qrcp_counted, PartialFactorization, Permutation};
use crate::rng::{gaussian_matrix, streams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SketchParams {
    /// Target rank.
    pub k: usize,
    /// Factorization rank, `l ≥ k`.
    pub l: usize,
    /// Block size.
    pub b: usize,
    /// Oversampling.
    pub p: usize,
    /// Reliability parameter in `(0, 1)`.
    pub epsilon: f64,
    /// Swap tolerance, `> 1`.
    pub g: f64,
    /// Rows of the random matrix used to estimate `g2`.
    pub d: usize,
    pub seed: u64,
}

impl SketchParams {
    /// Defaults: `l = k`, `b = 32`, `p = 5`, `ε = 1/2`, `g = 2`, `d = min(l, 10)`, seed 0.
    pub fn new(k: usize) -> Self {
        Self { k, l: k, b: 32, p: 5, epsilon: 0.5, g: 2.0, d: k.clamp(1, 10), seed: 0 }
    }

    /// Sets `l` and resets `d` to `min(l, 10)`.
    pub fn with_l(mut self, l: usize) -> Self {
        self.l = l;
        self.d = l.clamp(1, 10);
        self
    }

    pub fn with_block(mut self, b: usize, p: usize) -> Self {
        self.b = b;
        self.p = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn sketch_rows(&self) -> usize {
        self.b + self.p
    }

    /// Checks the parameter invariants against an `m x n` input.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let kmax = m.min(n);
        if self.k == 0 || self.k > self.l {
            return Err(Error::InvalidParameter("need 1 <= k <= l"));
        }
        if self.l > kmax {
            return Err(Error::RankOutOfRange { rank: self.l, max: kmax });
        }
        if self.b == 0 {
            return Err(Error::InvalidParameter("block size b must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1)"));
        }
        if !(self.g > 1.0) {
            return Err(Error::InvalidParameter("g must exceed 1"));
        }
        if self.d == 0 || self.d > self.l {
            return Err(Error::InvalidParameter("need 1 <= d <= l"));
        }
        if self.b + self.p > m {
            return Err(Error::SketchTooLarge { rows: self.b + self.p, m });
        }
        Ok(())
    }
}

/// Whether the trailing matrix is updated explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMode {
    Full,
    Truncated,
}

/// Block-by-block randomized QRCP. Exposed so the sketch can be inspected between blocks.
pub struct BlockedSketchQr<'a> {
    a: &'a DenseMatrix,
    l: usize,
    b: usize,
    mode: UpdateMode,
    omega: DenseMatrix,
    sketch: DenseMatrix,
    perm: Permutation,
    wy: WyFactor,
    /// `Wᵀ`, `l x n`. Truncated mode only.
    wt: DenseMatrix,
    /// `R`, `l x n`. Truncated mode only.
    r: DenseMatrix,
    /// Explicitly updated `AΠ`. Full mode only.
    work: DenseMatrix,
    j: usize,
    flops: &'a Flops,
}

impl<'a> BlockedSketchQr<'a> {
    pub fn new(a: &'a DenseMatrix, params: &SketchParams, mode: UpdateMode, flops: &'a Flops) -> Result<Self> {
        let (m, n) = a.shape();
        params.validate(m, n)?;
        a.check_finite()?;
        let omega = gaussian_matrix(params.sketch_rows(), m, params.seed, streams::SKETCH);
        let sketch = omega.matmul_counted(a, flops);
        let l = params.l;
        let (wt, r, work) = match mode {
            UpdateMode::Truncated => (DenseMatrix::zeros(l, n), DenseMatrix::zeros(l, n), DenseMatrix::zeros(0, 0)),
            UpdateMode::Full => (DenseMatrix::zeros(0, 0), DenseMatrix::zeros(0, 0), a.clone()),
        };
        Ok(Self {
            a,
            l,
            b: params.b,
            mode,
            omega,
            sketch,
            perm: Permutation::identity(n),
            wy: WyFactor::new(m),
            wt,
            r,
            work,
            j: 0,
            flops,
        })
    }

    pub fn omega(&self) -> &DenseMatrix {
        &self.omega
    }

    /// Current sketch, columns in the current pivot order.
    pub fn sketch(&self) -> &DenseMatrix {
        &self.sketch
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn wy(&self) -> &WyFactor {
        &self.wy
    }

    /// Number of columns factored so far.
    pub fn factored(&self) -> usize {
        self.j
    }

    pub fn is_done(&self) -> bool {
        self.j >= self.l
    }

    /// Factors the next block. Returns `false` once all `l` columns are done.
    pub fn step_block(&mut self) -> bool {
        if self.is_done() {
            return false;
        }
        let j = self.j;
        let bsz = self.b.min(self.l - j);
        let n = self.a.cols();

        let trailing = self.sketch.submatrix(0..self.sketch.rows(), j..n);
        let local = partial_qrcp_counted(&trailing, bsz, self.flops).expect("block size fits the sketch").perm;
        self.apply_local_perm(j, local.as_slice());

        match self.mode {
            UpdateMode::Truncated => self.factor_block_truncated(j, bsz),
            UpdateMode::Full => self.factor_block_full(j, bsz),
        }
        self.update_sketch(j, bsz);
        self.j += bsz;
        true
    }

    fn apply_local_perm(&mut self, j: usize, local: &[usize]) {
        let gather = |v: &mut [usize]| {
            let old = v[j..].to_vec();
            for (c, &src) in local.iter().enumerate() {
                v[j + c] = old[src];
            }
        };
        gather(self.perm.as_mut_vec());
        permute_tail_cols(&mut self.sketch, j, local);
        match self.mode {
            UpdateMode::Truncated => {
                permute_tail_cols(&mut self.wt, j, local);
                permute_tail_cols(&mut self.r, j, local);
            }
            UpdateMode::Full => permute_tail_cols(&mut self.work, j, local),
        }
    }

    fn factor_block_truncated(&mut self, j: usize, bsz: usize) {
        let (m, n) = self.a.shape();
        let perm = self.perm.as_slice();
        let flops = self.flops;

        // Panel: (Q_oldᵀ AΠ)(:, j..j+bsz) = AΠ(:, panel) − Y_old Wᵀ_old(:, panel).
        let mut panel = self.a.select_cols(&perm[j..j + bsz]);
        if j > 0 {
            let wt_old = self.wt.submatrix(0..j, j..j + bsz);
            gemm_acc(-1.0, self.wy.y(), &wt_old, &mut panel, flops);
        }
        for i in 0..bsz {
            let row = j + i;
            let h = householder_reflector(&panel.col(i)[row..]).expect("non-empty column");
            flops.add(3 * (m - row));
            h.apply_to_cols(&mut panel, row, i + 1..bsz, flops);
            panel[(row, i)] = h.alpha;
            self.wy.append_counted(&h.v, h.beta, flops).expect("consistent reflector length");
        }
        for c in 0..bsz {
            for i in 0..=c {
                self.r[(j + i, j + c)] = panel[(j + i, c)];
            }
        }

        let t0 = j + bsz;
        if t0 == n {
            return;
        }
        let nt = n - t0;
        // G = Y_blkᵀ AΠ(:, trailing) − (Y_blkᵀ Y_old) Wᵀ_old(:, trailing)
        let y = self.wy.y();
        let mut g = DenseMatrix::zeros(bsz, nt);
        for (c, &src) in perm[t0..].iter().enumerate() {
            let acol = self.a.col(src);
            for i in 0..bsz {
                let row = j + i;
                g[(i, c)] = dot(&y.col(row)[row..], &acol[row..]);
            }
        }
        flops.add((0..bsz).map(|i| 2 * (m - j - i) * nt).sum());
        if j > 0 {
            let mut s = DenseMatrix::zeros(bsz, j);
            for i in 0..bsz {
                let row = j + i;
                for q in 0..j {
                    s[(i, q)] = dot(&y.col(row)[row..], &y.col(q)[row..]);
                }
            }
            flops.add(2 * bsz * j * (m - j));
            let wt_old = self.wt.submatrix(0..j, t0..n);
            gemm_acc(-1.0, &s, &wt_old, &mut g, flops);
        }
        // New Wᵀ rows = T_blkᵀ G, T_blk the trailing diagonal block of T.
        let t = self.wy.t();
        for c in 0..nt {
            for i in 0..bsz {
                let mut acc = 0.0;
                for q in 0..=i {
                    acc += t[(j + q, j + i)] * g[(q, c)];
                }
                self.wt[(j + i, t0 + c)] = acc;
            }
        }
        flops.add(bsz * bsz * nt);

        // R(j..j+bsz, trailing) = AΠ(j..j+bsz, trailing) − Y(j..j+bsz, :) Wᵀ(:, trailing).
        let kk = j + bsz;
        for (c, &src) in perm[t0..].iter().enumerate() {
            let acol = self.a.col(src);
            for i in 0..bsz {
                let row = j + i;
                let mut acc = acol[row];
                for q in 0..=row {
                    acc -= y[(row, q)] * self.wt[(q, t0 + c)];
                }
                self.r[(row, t0 + c)] = acc;
            }
        }
        flops.add(2 * bsz * kk * nt);
    }

    fn factor_block_full(&mut self, j: usize, bsz: usize) {
        let (m, n) = self.a.shape();
        for i in 0..bsz {
            let col = j + i;
            let h = householder_reflector(&self.work.col(col)[col..]).expect("non-empty column");
            self.flops.add(3 * (m - col));
            h.apply_to_cols(&mut self.work, col, col + 1..n, self.flops);
            self.work[(col, col)] = h.alpha;
            for r in col + 1..m {
                self.work[(r, col)] = 0.0;
            }
            self.wy.append_counted(&h.v, h.beta, self.flops).expect("consistent reflector length");
        }
    }

    fn r_entry(&self, i: usize, c: usize) -> f64 {
        match self.mode {
            UpdateMode::Truncated => self.r[(i, c)],
            UpdateMode::Full => self.work[(i, c)],
        }
    }

    /// `B(:, trailing) −= B(:, panel) R11⁻¹ R12`.
    fn update_sketch(&mut self, j: usize, bsz: usize) {
        let n = self.a.cols();
        let t0 = j + bsz;
        if t0 == n {
            return;
        }
        let nt = n - t0;
        let scale = (0..bsz).map(|i| self.r_entry(j + i, j + i).abs()).fold(0.0, f64::max);
        let tiny = scale * f64::EPSILON * (self.a.rows() as f64);
        let mut x = DenseMatrix::zeros(bsz, nt);
        for c in 0..nt {
            for i in (0..bsz).rev() {
                let d = self.r_entry(j + i, j + i);
                if d.abs() <= tiny {
                    x[(i, c)] = 0.0;
                    continue;
                }
                let mut acc = self.r_entry(j + i, t0 + c);
                for q in i + 1..bsz {
                    acc -= self.r_entry(j + i, j + q) * x[(q, c)];
                }
                x[(i, c)] = acc / d;
            }
        }
        self.flops.add(bsz * bsz * nt);
        let bp = self.sketch.submatrix(0..self.sketch.rows(), j..t0);
        let mut bt = self.sketch.submatrix(0..self.sketch.rows(), t0..n);
        gemm_acc(-1.0, &bp, &x, &mut bt, self.flops);
        self.sketch.set_block(0, t0, &bt);
    }

    /// Runs all remaining blocks and returns the factorization and final sketch.
    pub fn finish(mut self) -> (PartialFactorization, DenseMatrix) {
        while self.step_block() {}
        let l = self.l;
        let r = match self.mode {
            UpdateMode::Truncated => self.r,
            UpdateMode::Full => {
                let w = &self.work;
                DenseMatrix::from_fn(l, w.cols(), |i, c| if i <= c { w[(i, c)] } else { 0.0 })
            }
        };
        (PartialFactorization { wy: self.wy, r, perm: self.perm, k: l }, self.sketch)
    }
}

/// Reorders columns `j..` so that new column `j + c` is old column `j + local[c]`.
fn permute_tail_cols(m: &mut DenseMatrix, j: usize, local: &[usize]) {
    if m.cols() == 0 {
        return;
    }
    let rows = m.rows();
    let old = m.as_slice()[j * rows..].to_vec();
    let data = m.as_mut_slice();
    for (c, &src) in local.iter().enumerate() {
        data[(j + c) * rows..(j + c + 1) * rows].copy_from_slice(&old[src * rows..(src + 1) * rows]);
    }
}

/// Randomized QRCP with explicit trailing updates, stopped after `params.l` columns.
pub fn rqrcp(a: &DenseMatrix, params: &SketchParams) -> Result<PartialFactorization> {
    let flops = Flops::new();
    Ok(BlockedSketchQr::new(a, params, UpdateMode::Full, &flops)?.finish().0)
}

/// Truncated randomized QRCP: `l` steps without updating the trailing matrix.
pub fn trqrcp(a: &DenseMatrix, params: &SketchParams) -> Result<PartialFactorization> {
    trqrcp_counted(a, params, &Flops::new())
}

pub fn trqrcp_counted(a: &DenseMatrix, params: &SketchParams, flops: &Flops) -> Result<PartialFactorization> {
    Ok(BlockedSketchQr::new(a, params, UpdateMode::Truncated, flops)?.finish().0)
}

/// Truncated run that also returns the final sketch (columns in pivot order).
pub(crate) fn trqrcp_with_sketch(
    a: &DenseMatrix,
    params: &SketchParams,
    flops: &Flops,
) -> Result<(PartialFactorization, DenseMatrix)> {
    Ok(BlockedSketchQr::new(a, params, UpdateMode::Truncated, flops)?.finish())
}
