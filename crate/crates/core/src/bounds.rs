//! Dense checkers for the quality bounds of Flip-Flop SRQR.
//!
//! Everything here forms dense intermediates and is meant for test-scale inputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flipflop::ApproxSvd;
use crate::math::{powf, sqrt};
use crate::matrix::DenseMatrix;
use crate::qrcp::PartialFactorization;
use crate::svd::{norm2, singular_values};

/// Relative slack applied to every inequality.
pub const SLACK: f64 = 1e-8;

/// `‖R⁻ᵀ‖₁,₂`: the largest row norm of `R⁻¹` for upper-triangular `R`.
pub fn inverse_t_norm_12(r: &DenseMatrix) -> f64 {
    let n = r.rows();
    let mut row_sq = vec![0.0; n];
    let mut x = vec![0.0; n];
    for j in 0..n {
        // Column j of R⁻¹.
        x.iter_mut().for_each(|v| *v = 0.0);
        for i in (0..=j).rev() {
            let mut acc = if i == j { 1.0 } else { 0.0 };
            for p in i + 1..=j {
                acc -= r[(i, p)] * x[p];
            }
            x[i] = acc / r[(i, i)];
        }
        for i in 0..=j {
            row_sq[i] += x[i] * x[i];
        }
    }
    sqrt(row_sq.iter().fold(0.0, |m: f64, &v| m.max(v)))
}

/// `|R̃(l, l)| ‖R̃⁻ᵀ‖₁,₂`
pub fn exact_g2(rtilde: &DenseMatrix) -> f64 {
    let l = rtilde.rows() - 1;
    rtilde[(l, l)].abs() * inverse_t_norm_12(rtilde)
}

/// `(I − Q₁Q₁ᵀ) AΠ(:, l..n)`; it has the same spectral and column norms as `R₂₂`.
pub fn exact_r22(a: &DenseMatrix, fact: &PartialFactorization) -> DenseMatrix {
    let l = fact.k;
    let q1 = fact.q_thin();
    let trailing = a.select_cols(&fact.perm.as_slice()[l..]);
    trailing.sub(&q1.matmul(&q1.t_matmul(&trailing)))
}

/// `[R₁₁ a; 0 α]` with `α` the exact norm of the projected column `l`.
pub fn rtilde(a: &DenseMatrix, fact: &PartialFactorization) -> DenseMatrix {
    let l = fact.k;
    let r22 = exact_r22(a, fact);
    let mut rt = DenseMatrix::zeros(l + 1, l + 1);
    rt.set_block(0, 0, &fact.r.submatrix(0..l, 0..l + 1));
    rt[(l, l)] = sqrt(crate::math::norm_sq(r22.col(0)));
    rt
}

/// `‖R₂₂‖₁,₂ / |α|` computed densely.
pub fn exact_g1(a: &DenseMatrix, fact: &PartialFactorization) -> f64 {
    let r22 = exact_r22(a, fact);
    let norms = r22.col_norms_sq();
    let alpha = sqrt(norms[0]);
    if alpha == 0.0 {
        return 0.0;
    }
    sqrt(norms.iter().fold(0.0, |m: f64, &v| m.max(v))) / alpha
}

/// One inequality `lhs ≤ rhs` (upper) or `lhs ≥ rhs` (lower).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub index: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub upper: bool,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        if !self.lhs.is_finite() || !self.rhs.is_finite() {
            return false;
        }
        if self.upper {
            self.lhs <= self.rhs * (1.0 + SLACK)
        } else {
            self.lhs >= self.rhs * (1.0 - SLACK)
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub sigma_exact: Vec<f64>,
    pub r22_norm2: f64,
    pub g1: f64,
    pub g2: f64,
    pub tau: f64,
    pub tau_hat: f64,
    /// `σ_{l+1}(A)` is numerically zero: every bound holds trivially.
    pub degenerate: bool,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn violations(&self) -> Vec<&BoundCheck> {
        if self.degenerate {
            return Vec::new();
        }
        self.checks.iter().filter(|c| !c.holds()).collect()
    }

    pub fn all_hold(&self) -> bool {
        self.violations().is_empty()
    }

    /// `σ_j(Σ_k) / σ_j(A)` for every `j ≤ k`.
    pub fn sigma_ratios(&self, approx: &ApproxSvd) -> Vec<f64> {
        approx.sigma.iter().zip(&self.sigma_exact).map(|(s, e)| s / e).collect()
    }
}

/// Checks the auxiliary and final singular value and residual bounds and the
/// dimensional bounds on `τ`, `τ̂` for a Flip-Flop result and its SRQR factorization.
pub fn check_theorem_bounds(a: &DenseMatrix, approx: &ApproxSvd, fact: &PartialFactorization) -> Result<BoundReport> {
    let (m, n) = a.shape();
    let l = fact.k;
    let k = approx.k;
    if l + 1 > m.min(n) || k > l {
        return Err(Error::Dimension("need k <= l < min(m, n)"));
    }
    let sigma = singular_values(a);
    let r22 = exact_r22(a, fact);
    let r22_2 = norm2(&r22);
    let r22_12 = sqrt(r22.col_norms_sq().iter().fold(0.0, |m: f64, &v| m.max(v)));
    let rt = rtilde(a, fact);
    let alpha = rt[(l, l)];
    let rt_inv = inverse_t_norm_12(&rt);
    let r11_inv = inverse_t_norm_12(&fact.r.submatrix(0..l, 0..l));
    let g1 = if alpha > 0.0 { r22_12 / alpha } else { 0.0 };
    let g2 = alpha * rt_inv;

    let s_l1 = sigma[l];
    let degenerate = s_l1 <= f64::EPSILON * (m.max(n) as f64) * sigma[0];
    let sk = approx.sigma[k - 1];
    let ratio22 = if r22_12 > 0.0 { r22_2 / r22_12 } else { 0.0 };
    let tau = g1 * g2 * ratio22 / rt_inv / s_l1;
    let tau_hat = g1 * g2 * ratio22 / r11_inv / sk;
    let fourth = |x: f64| powf(x, 0.25);

    let residual = norm2(&a.sub(&approx.reconstruct()));
    let s_k1 = if k < sigma.len() { sigma[k] } else { 0.0 };

    let mut checks = Vec::new();
    for j in 0..k {
        let sj = approx.sigma[j];
        checks.push(BoundCheck {
            name: "aux_lower",
            index: Some(j),
            lhs: sj,
            rhs: sigma[j] / fourth(1.0 + 2.0 * powf(r22_2 / sj, 4.0)),
            upper: false,
        });
        let t4 = powf(tau, 4.0);
        let th4 = powf(tau_hat, 4.0);
        let inner = (2.0 * th4).min(t4 * (2.0 + 4.0 * th4) * powf(s_l1 / sigma[j], 4.0));
        checks.push(BoundCheck {
            name: "tau_lower",
            index: Some(j),
            lhs: sj,
            rhs: sigma[j] / fourth(1.0 + inner),
            upper: false,
        });
    }
    checks.push(BoundCheck {
        name: "aux_residual",
        index: None,
        lhs: residual,
        rhs: s_k1 * fourth(1.0 + 2.0 * powf(r22_2 / s_k1, 4.0)),
        upper: true,
    });
    checks.push(BoundCheck {
        name: "tau_residual",
        index: None,
        lhs: residual,
        rhs: s_k1 * fourth(1.0 + 2.0 * powf(tau, 4.0) * powf(s_l1 / s_k1, 4.0)),
        upper: true,
    });
    let dim = (n - l) as f64;
    checks.push(BoundCheck {
        name: "tau_dimensional",
        index: None,
        lhs: tau,
        rhs: g1 * g2 * sqrt((l as f64 + 1.0) * dim),
        upper: true,
    });
    checks.push(BoundCheck {
        name: "tau_hat_dimensional",
        index: None,
        lhs: tau_hat,
        rhs: g1 * g2 * sqrt(l as f64 * dim),
        upper: true,
    });

    Ok(BoundReport { sigma_exact: sigma[..k].to_vec(), r22_norm2: r22_2, g1, g2, tau, tau_hat, degenerate, checks })
}

/// Largest violation of `σ_j(X)² ≤ σ_j(X₁)² + ‖X₂‖₂²` over `j`, where
/// `X₁ = X(:, 0..split)` and `X₂ = X(:, split..)`. Non-positive means it holds.
pub fn partition_inequality_gap(x: &DenseMatrix, split: usize) -> f64 {
    let (m, n) = x.shape();
    assert!(split <= n);
    let s = singular_values(x);
    let s1 = singular_values(&x.submatrix(0..m, 0..split));
    let x2 = norm2(&x.submatrix(0..m, split..n));
    s.iter()
        .enumerate()
        .map(|(j, &sj)| {
            let s1j = s1.get(j).copied().unwrap_or(0.0);
            sj * sj - (s1j * s1j + x2 * x2)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
