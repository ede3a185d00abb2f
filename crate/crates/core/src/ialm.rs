//! Inexact augmented Lagrange multiplier solvers for robust PCA and matrix completion.
//!
//! Both solvers shrink singular values through a truncated SVD [`Engine`]. The number
//! of singular triplets requested per iteration (`sv`) starts at
//! [`IalmParams::sv_guess`] and grows by 5 (by 10% once above 50) whenever every
//! returned value survives the threshold `1/μ`. It never shrinks.

use alloc::vec;
use alloc::vec::Vec;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::math::{ceil, norm_sq, sqrt};
use crate::matrix::DenseMatrix;
use crate::svd::svd;

/// `sgn(x) max(|x| - ω, 0)`
#[inline]
pub fn shrink(x: f64, omega: f64) -> f64 {
    if x > omega {
        x - omega
    } else if x < -omega {
        x + omega
    } else {
        0.0
    }
}

/// Elementwise soft shrinkage.
pub fn soft_shrink(x: &[f64], omega: f64) -> Vec<f64> {
    x.iter().map(|&v| shrink(v, omega)).collect()
}

/// Solver parameters. `None` fields take data-dependent defaults:
/// `λ = 1/√max(m, n)`, `μ₀ = 1.25/‖M‖₂`, `μ̄ = 10⁷ μ₀` and `ρ = 1.5`, where `M` is
/// `π_Ω(M)` for completion.
#[derive(Clone, Debug, PartialEq)]
pub struct IalmParams {
    pub lambda: Option<f64>,
    pub mu0: Option<f64>,
    pub mu_bar: Option<f64>,
    pub rho: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub engine: Engine,
    pub sv_guess: usize,
}

impl Default for IalmParams {
    fn default() -> Self {
        Self {
            lambda: None,
            mu0: None,
            mu_bar: None,
            rho: None,
            tol: 1e-7,
            max_iter: 100,
            engine: Engine::Exact,
            sv_guess: 10,
        }
    }
}

impl IalmParams {
    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    fn resolve(&self, lambda: f64, mu0: f64, rho: f64) -> Result<Resolved> {
        let lambda = self.lambda.unwrap_or(lambda);
        let mu0 = self.mu0.unwrap_or(mu0);
        let mu_bar = self.mu_bar.unwrap_or(1e7 * mu0);
        let rho = self.rho.unwrap_or(rho);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive"));
        }
        if !(mu0 > 0.0 && mu0.is_finite()) {
            return Err(Error::InvalidParameter("mu0 must be positive"));
        }
        if !(mu_bar >= mu0) {
            return Err(Error::InvalidParameter("mu_bar must be at least mu0"));
        }
        if !(rho > 1.0) {
            return Err(Error::InvalidParameter("rho must exceed 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive"));
        }
        if self.max_iter == 0 || self.sv_guess == 0 {
            return Err(Error::InvalidParameter("max_iter and sv_guess must be positive"));
        }
        Ok(Resolved { lambda, mu_bar, rho, mu0 })
    }
}

#[derive(Clone, Copy, Debug)]
struct Resolved {
    lambda: f64,
    mu0: f64,
    mu_bar: f64,
    rho: f64,
}

/// One iteration of a solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// Relative constraint residual after the iteration.
    pub residual: f64,
    /// `μ` used during the iteration.
    pub mu: f64,
    /// Singular triplets requested from the engine.
    pub sv: usize,
    /// Singular values above `1/μ`, i.e. the rank of the new `X`.
    pub rank: usize,
}

/// Sparse observations `(i, j) ↦ value`, sorted by `(i, j)` without duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    indices: Vec<(usize, usize)>,
    values: Vec<f64>,
    shape: (usize, usize),
}

impl ObservationSet {
    /// Sorts the entries; rejects duplicates, out-of-bounds indices and non-finite values.
    pub fn new(indices: Vec<(usize, usize)>, values: Vec<f64>, shape: (usize, usize)) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Dimension("indices and values differ in length"));
        }
        if indices.is_empty() {
            return Err(Error::Empty("observation set"));
        }
        let mut pairs: Vec<((usize, usize), f64)> = indices.into_iter().zip(values).collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter("duplicate observation index"));
            }
        }
        if pairs.iter().any(|&((i, j), _)| i >= shape.0 || j >= shape.1) {
            return Err(Error::Dimension("observation index out of bounds"));
        }
        let bad = pairs.iter().filter(|p| !p.1.is_finite()).count();
        if bad > 0 {
            return Err(Error::NonFinite(bad));
        }
        let (indices, values) = pairs.into_iter().unzip();
        Ok(Self { indices, values, shape })
    }

    /// An observation set without entries; only meaningful as a held-out set.
    pub fn empty(shape: (usize, usize)) -> Result<Self> {
        Ok(Self { indices: Vec::new(), values: Vec::new(), shape })
    }

    /// Every entry of `m`.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let (r, c) = m.shape();
        let mut indices = Vec::with_capacity(r * c);
        let mut values = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                indices.push((i, j));
                values.push(m[(i, j)]);
            }
        }
        Self { indices, values, shape: (r, c) }
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `π_Ω(M)` as a dense matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.shape.0, self.shape.1);
        for (&(i, j), &v) in self.indices.iter().zip(&self.values) {
            m[(i, j)] = v;
        }
        m
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.indices.binary_search(&(i, j)).is_ok()
    }
}

/// `(1/|Γ|) Σ |M_ij − X_ij| / (r_max − r_min)` over the test entries.
pub fn nmae(test: &ObservationSet, x: &DenseMatrix, r_min: f64, r_max: f64) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if !(r_max > r_min) {
        return Err(Error::InvalidParameter("r_max must exceed r_min"));
    }
    if x.shape() != test.shape() {
        return Err(Error::Dimension("prediction shape differs from the observation shape"));
    }
    let total: f64 = test.indices().iter().zip(test.values()).map(|(&(i, j), &v)| (v - x[(i, j)]).abs()).sum();
    Ok(total / test.len() as f64 / (r_max - r_min))
}

/// Relative Frobenius error of `x` on the entries of `test`.
pub fn held_out_error(test: &ObservationSet, x: &DenseMatrix) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&(i, j), &v) in test.indices().iter().zip(test.values()) {
        num += (v - x[(i, j)]) * (v - x[(i, j)]);
        den += v * v;
    }
    if den == 0.0 {
        sqrt(num)
    } else {
        sqrt(num / den)
    }
}

/// Singular value thresholding through `engine`, updating the rank prediction `sv`.
/// Returns `(X, requested, rank)`.
fn svt(z: &DenseMatrix, tau: f64, sv: &mut usize, engine: &Engine, call: u64) -> Result<(DenseMatrix, usize, usize)> {
    let (m, n) = z.shape();
    let kmin = m.min(n);
    let requested = (*sv).min(kmin);
    // The dense path is used outright when the prediction is a large share of the spectrum.
    let dense = matches!(engine, Engine::Exact) || 2 * requested >= kmin;
    let (u, s, v) = if dense {
        let d = svd(z);
        (d.u, d.s, d.v)
    } else {
        let a = engine.truncated(z, requested, call)?;
        (a.u, a.sigma, a.v)
    };
    let rank = s.iter().take_while(|&&x| x > tau).count();
    let mut x = DenseMatrix::zeros(m, n);
    for r in 0..rank {
        let w = s[r] - tau;
        let ur = u.col(r);
        for j in 0..n {
            let c = w * v[(j, r)];
            if c != 0.0 {
                crate::math::axpy(c, ur, x.col_mut(j));
            }
        }
    }
    if rank >= requested {
        *sv = if requested > 50 { ceil(1.1 * requested as f64) as usize } else { requested + 5 }.min(kmin);
    }
    Ok((x, requested, rank))
}

/// Robust PCA iterate `(X, E, Y, μ)`.
#[derive(Clone, Debug)]
pub struct IalmState {
    pub x: DenseMatrix,
    pub e: DenseMatrix,
    pub y: DenseMatrix,
    pub mu: f64,
    pub iter: usize,
    pub sv_count: usize,
}

/// Result of a solver run. `converged` is false when `max_iter` was reached, in which
/// case the iterate with the smallest residual is returned.
#[derive(Clone, Debug)]
pub struct RpcaOutput {
    pub x: DenseMatrix,
    pub e: DenseMatrix,
    pub trace: Vec<IterRecord>,
    pub converged: bool,
}

/// Step-by-step robust PCA solver for `min ‖X‖_* + λ‖E‖₁ s.t. M = X + E`.
pub struct IalmRpca<'a> {
    m: &'a DenseMatrix,
    p: Resolved,
    tol: f64,
    max_iter: usize,
    engine: Engine,
    norm_fro: f64,
    sv: usize,
    state: IalmState,
    residual: f64,
    trace: Vec<IterRecord>,
    best: Option<(f64, DenseMatrix, DenseMatrix)>,
}

impl<'a> IalmRpca<'a> {
    pub fn new(m: &'a DenseMatrix, params: &IalmParams) -> Result<Self> {
        m.check_finite()?;
        let (rows, cols) = m.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("matrix"));
        }
        let norm_fro = m.norm_fro();
        let norm2 = m.norm2_estimate(1e-6, 1000);
        let zero = norm_fro == 0.0;
        let lambda = 1.0 / sqrt(rows.max(cols) as f64);
        let p = params.resolve(lambda, if zero { 1.0 } else { 1.25 / norm2 }, 1.5)?;
        let mut y = m.clone();
        if !zero {
            // Y₀ = M / J(M) with J(M) = max(‖M‖₂, max|M_ij|).
            y.scale(1.0 / norm2.max(m.max_abs()));
        }
        let state = IalmState {
            x: DenseMatrix::zeros(rows, cols),
            e: DenseMatrix::zeros(rows, cols),
            y,
            mu: p.mu0,
            iter: 0,
            sv_count: 0,
        };
        Ok(Self {
            m,
            p,
            tol: params.tol,
            max_iter: params.max_iter,
            engine: params.engine,
            norm_fro,
            sv: params.sv_guess,
            state,
            residual: f64::INFINITY,
            trace: Vec::new(),
            best: None,
        })
    }

    pub fn state(&self) -> &IalmState {
        &self.state
    }

    pub fn lambda(&self) -> f64 {
        self.p.lambda
    }

    pub fn rho(&self) -> f64 {
        self.p.rho
    }

    pub fn mu_bar(&self) -> f64 {
        self.p.mu_bar
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn converged(&self) -> bool {
        self.residual < self.tol
    }

    pub fn done(&self) -> bool {
        self.converged() || self.state.iter >= self.max_iter
    }

    pub fn trace(&self) -> &[IterRecord] {
        &self.trace
    }

    /// Performs one iteration and returns its record.
    pub fn step(&mut self) -> Result<IterRecord> {
        let st = &mut self.state;
        let mu = st.mu;
        let inv = 1.0 / mu;
        let requested;
        if self.norm_fro == 0.0 {
            requested = 0;
            st.sv_count = 0;
            self.residual = 0.0;
        } else {
            let mut z = self.m.sub(&st.e);
            z.add_scaled(inv, &st.y);
            let (x, req, rank) = svt(&z, inv, &mut self.sv, &self.engine, st.iter as u64)?;
            requested = req;
            st.x = x;
            st.sv_count = rank;
            let thr = self.p.lambda * inv;
            let (m, x, y, e) = (self.m.as_slice(), st.x.as_slice(), st.y.as_slice(), st.e.as_mut_slice());
            for i in 0..m.len() {
                e[i] = shrink(m[i] - x[i] + inv * y[i], thr);
            }
            let mut r = self.m.sub(&st.x);
            r.add_scaled(-1.0, &st.e);
            st.y.add_scaled(mu, &r);
            self.residual = sqrt(norm_sq(r.as_slice())) / self.norm_fro;
            st.mu = (self.p.rho * mu).min(self.p.mu_bar);
        }
        st.iter += 1;
        let rec = IterRecord { iter: st.iter, residual: self.residual, mu, sv: requested, rank: st.sv_count };
        self.trace.push(rec);
        if self.best.as_ref().is_none_or(|b| self.residual < b.0) {
            self.best = Some((self.residual, self.state.x.clone(), self.state.e.clone()));
        }
        Ok(rec)
    }

    pub fn run(mut self) -> Result<RpcaOutput> {
        while !self.done() {
            self.step()?;
        }
        let converged = self.converged();
        let (x, e) = if converged {
            (self.state.x, self.state.e)
        } else {
            let b = self.best.expect("at least one iteration ran");
            (b.1, b.2)
        };
        Ok(RpcaOutput { x, e, trace: self.trace, converged })
    }
}

/// Robust PCA: splits `m` into a low-rank `X` and a sparse `E`.
pub fn ialm_rpca(m: &DenseMatrix, params: &IalmParams) -> Result<RpcaOutput> {
    IalmRpca::new(m, params)?.run()
}

/// Matrix completion iterate. `E = −π_Ω̄(X)` and `Y` lives on `Ω`, so only `X`, the
/// multiplier values on `Ω` and `μ` are stored.
#[derive(Clone, Debug)]
pub struct McState {
    pub x: DenseMatrix,
    /// `Y` on the observed entries, aligned with the observation set.
    pub y: Vec<f64>,
    pub mu: f64,
    pub iter: usize,
    pub sv_count: usize,
}

impl McState {
    /// Dense `E_k`.
    pub fn e(&self, obs: &ObservationSet) -> DenseMatrix {
        let mut e = self.x.scaled(-1.0);
        for &(i, j) in obs.indices() {
            e[(i, j)] = 0.0;
        }
        e
    }

    /// Dense `Y_k`.
    pub fn y_dense(&self, obs: &ObservationSet) -> DenseMatrix {
        let (m, n) = obs.shape();
        let mut y = DenseMatrix::zeros(m, n);
        for (&(i, j), &v) in obs.indices().iter().zip(&self.y) {
            y[(i, j)] = v;
        }
        y
    }
}

#[derive(Clone, Debug)]
pub struct McOutput {
    pub x: DenseMatrix,
    pub trace: Vec<IterRecord>,
    pub converged: bool,
}

/// Step-by-step solver for `min ‖X‖_* s.t. X + E = π_Ω(M), π_Ω(E) = 0`.
pub struct IalmMc<'a> {
    obs: &'a ObservationSet,
    p: Resolved,
    tol: f64,
    max_iter: usize,
    engine: Engine,
    norm_fro: f64,
    sv: usize,
    state: McState,
    residual: f64,
    trace: Vec<IterRecord>,
    best: Option<(f64, DenseMatrix)>,
}

impl<'a> IalmMc<'a> {
    pub fn new(obs: &'a ObservationSet, params: &IalmParams) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::Empty("observation set"));
        }
        let (m, n) = obs.shape();
        let d = obs.to_dense();
        let norm_fro = sqrt(norm_sq(obs.values()));
        let zero = norm_fro == 0.0;
        let norm2 = d.norm2_estimate(1e-6, 1000);
        let lambda = 1.0 / sqrt(m.max(n) as f64);
        let p = params.resolve(lambda, if zero { 1.0 } else { 1.25 / norm2 }, 1.5)?;
        let state = McState { x: DenseMatrix::zeros(m, n), y: vec![0.0; obs.len()], mu: p.mu0, iter: 0, sv_count: 0 };
        Ok(Self {
            obs,
            p,
            tol: params.tol,
            max_iter: params.max_iter,
            engine: params.engine,
            norm_fro,
            sv: params.sv_guess,
            state,
            residual: f64::INFINITY,
            trace: Vec::new(),
            best: None,
        })
    }

    pub fn state(&self) -> &McState {
        &self.state
    }

    pub fn rho(&self) -> f64 {
        self.p.rho
    }

    pub fn mu_bar(&self) -> f64 {
        self.p.mu_bar
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn converged(&self) -> bool {
        self.residual < self.tol
    }

    pub fn done(&self) -> bool {
        self.converged() || self.state.iter >= self.max_iter
    }

    pub fn trace(&self) -> &[IterRecord] {
        &self.trace
    }

    pub fn step(&mut self) -> Result<IterRecord> {
        let st = &mut self.state;
        let mu = st.mu;
        let inv = 1.0 / mu;
        let requested;
        if self.norm_fro == 0.0 {
            requested = 0;
            st.sv_count = 0;
            self.residual = 0.0;
        } else {
            // M − E_k + Y_k/μ = π_Ω(M + Y_k/μ) + π_Ω̄(X_k)
            let mut z = st.x.clone();
            for ((&(i, j), &v), &y) in self.obs.indices().iter().zip(self.obs.values()).zip(&st.y) {
                z[(i, j)] = v + inv * y;
            }
            let (x, req, rank) = svt(&z, inv, &mut self.sv, &self.engine, st.iter as u64)?;
            requested = req;
            st.x = x;
            st.sv_count = rank;
            let mut res = 0.0;
            for ((&(i, j), &v), y) in self.obs.indices().iter().zip(self.obs.values()).zip(st.y.iter_mut()) {
                let r = v - st.x[(i, j)];
                *y += mu * r;
                res += r * r;
            }
            self.residual = sqrt(res) / self.norm_fro;
            st.mu = (self.p.rho * mu).min(self.p.mu_bar);
        }
        st.iter += 1;
        let rec = IterRecord { iter: st.iter, residual: self.residual, mu, sv: requested, rank: st.sv_count };
        self.trace.push(rec);
        if self.best.as_ref().is_none_or(|b| self.residual < b.0) {
            self.best = Some((self.residual, self.state.x.clone()));
        }
        Ok(rec)
    }

    pub fn run(mut self) -> Result<McOutput> {
        while !self.done() {
            self.step()?;
        }
        let converged = self.converged();
        let x = if converged { self.state.x } else { self.best.expect("at least one iteration ran").1 };
        Ok(McOutput { x, trace: self.trace, converged })
    }
}

/// Matrix completion from the entries in `obs`.
pub fn ialm_mc(obs: &ObservationSet, params: &IalmParams) -> Result<McOutput> {
    IalmMc::new(obs, params)?.run()
}
