//! Dense SVD by Householder bidiagonalization and implicit-shift QR (Golub–Kahan–Reinsch).
//!
//! Tall inputs are first reduced by an unpivoted QR, wide inputs are transposed, so
//! the iterative phase always runs on a square or slightly tall matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::flops::Flops;
use crate::householder::qr_nopivot;
use crate::math::{hypot, sqrt};
use crate::matrix::DenseMatrix;

/// Thin SVD `A = U diag(s) Vᵀ` with `p = min(m, n)` columns in `U` and `V`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

pub fn svd(a: &DenseMatrix) -> Svd {
    svd_counted(a, &Flops::new())
}

pub fn svd_counted(a: &DenseMatrix, flops: &Flops) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = svd_counted(&a.transpose(), flops);
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    if n == 0 {
        return Svd { u: DenseMatrix::zeros(m, 0), s: Vec::new(), v: DenseMatrix::zeros(0, 0) };
    }
    if m > n + n / 4 {
        // A = Q R, R = Ur S Vᵀ, U = Q [Ur; 0].
        let (wy, r) = qr_nopivot(a, flops);
        let (s, ur, v) = gk(r, true, true, flops);
        let ur = ur.expect("requested");
        let mut u = DenseMatrix::zeros(m, n);
        u.set_block(0, 0, &ur);
        wy.apply_q_mat(&mut u, flops);
        return Svd { u, s, v: v.expect("requested") };
    }
    let (s, u, v) = gk(a.clone(), true, true, flops);
    Svd { u: u.expect("requested"), s, v: v.expect("requested") }
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let (m, n) = a.shape();
    if m < n {
        return singular_values(&a.transpose());
    }
    if n == 0 {
        return Vec::new();
    }
    let flops = Flops::new();
    if m > n + n / 4 {
        let (_, r) = qr_nopivot(a, &flops);
        return gk(r, false, false, &flops).0;
    }
    gk(a.clone(), false, false, &flops).0
}

/// Spectral norm via the dense SVD.
pub fn norm2(a: &DenseMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

const MAX_SWEEPS_PER_VALUE: usize = 75;

/// Core routine for `m ≥ n`. Returns `(s, U (m x n), V (n x n))`.
#[allow(clippy::type_complexity)]
fn gk(
    mut a: DenseMatrix,
    want_u: bool,
    want_v: bool,
    flops: &Flops,
) -> (Vec<f64>, Option<DenseMatrix>, Option<DenseMatrix>) {
    let (m, n) = a.shape();
    debug_assert!(m >= n && n > 0);
    let nu = n;
    let mut s = vec![0.0; n.min(m + 1)];
    let mut u = DenseMatrix::zeros(if want_u { m } else { 0 }, if want_u { nu } else { 0 });
    let mut v = DenseMatrix::zeros(if want_v { n } else { 0 }, if want_v { n } else { 0 });
    let mut e = vec![0.0; n];
    let mut work = vec![0.0; m];
    flops.add(4 * m * n * n + 8 * n * n * n);

    // Bidiagonalization: diagonal into s, superdiagonal into e.
    let nct = (m - 1).min(n);
    let nrt = n.saturating_sub(2).min(m);
    for k in 0..nct.max(nrt) {
        if k < nct {
            s[k] = 0.0;
            for i in k..m {
                s[k] = hypot(s[k], a[(i, k)]);
            }
            if s[k] != 0.0 {
                if a[(k, k)] < 0.0 {
                    s[k] = -s[k];
                }
                for i in k..m {
                    a[(i, k)] /= s[k];
                }
                a[(k, k)] += 1.0;
            }
            s[k] = -s[k];
        }
        for j in k + 1..n {
            if k < nct && s[k] != 0.0 {
                let mut t = 0.0;
                for i in k..m {
                    t += a[(i, k)] * a[(i, j)];
                }
                t = -t / a[(k, k)];
                for i in k..m {
                    let aik = a[(i, k)];
                    a[(i, j)] += t * aik;
                }
            }
            e[j] = a[(k, j)];
        }
        if want_u && k < nct {
            for i in k..m {
                u[(i, k)] = a[(i, k)];
            }
        }
        if k < nrt {
            e[k] = 0.0;
            for i in k + 1..n {
                e[k] = hypot(e[k], e[i]);
            }
            if e[k] != 0.0 {
                if e[k + 1] < 0.0 {
                    e[k] = -e[k];
                }
                let ek = e[k];
                for x in &mut e[k + 1..n] {
                    *x /= ek;
                }
                e[k + 1] += 1.0;
            }
            e[k] = -e[k];
            if k + 1 < m && e[k] != 0.0 {
                work[k + 1..m].iter_mut().for_each(|w| *w = 0.0);
                for j in k + 1..n {
                    for i in k + 1..m {
                        work[i] += e[j] * a[(i, j)];
                    }
                }
                for j in k + 1..n {
                    let t = -e[j] / e[k + 1];
                    for i in k + 1..m {
                        a[(i, j)] += t * work[i];
                    }
                }
            }
            if want_v {
                for i in k + 1..n {
                    v[(i, k)] = e[i];
                }
            }
        }
    }

    let mut p = n.min(m + 1);
    if nct < n {
        s[nct] = a[(nct, nct)];
    }
    if m < p {
        s[p - 1] = 0.0;
    }
    if nrt + 1 < p {
        e[nrt] = a[(nrt, p - 1)];
    }
    e[p - 1] = 0.0;

    if want_u {
        for j in nct..nu {
            for i in 0..m {
                u[(i, j)] = 0.0;
            }
            u[(j, j)] = 1.0;
        }
        for k in (0..nct).rev() {
            if s[k] != 0.0 {
                for j in k + 1..nu {
                    let mut t = 0.0;
                    for i in k..m {
                        t += u[(i, k)] * u[(i, j)];
                    }
                    t = -t / u[(k, k)];
                    for i in k..m {
                        let uik = u[(i, k)];
                        u[(i, j)] += t * uik;
                    }
                }
                for i in k..m {
                    u[(i, k)] = -u[(i, k)];
                }
                u[(k, k)] += 1.0;
                for i in 0..k {
                    u[(i, k)] = 0.0;
                }
            } else {
                for i in 0..m {
                    u[(i, k)] = 0.0;
                }
                u[(k, k)] = 1.0;
            }
        }
    }

    if want_v {
        for k in (0..n).rev() {
            if k < nrt && e[k] != 0.0 {
                for j in k + 1..nu {
                    let mut t = 0.0;
                    for i in k + 1..n {
                        t += v[(i, k)] * v[(i, j)];
                    }
                    t = -t / v[(k + 1, k)];
                    for i in k + 1..n {
                        let vik = v[(i, k)];
                        v[(i, j)] += t * vik;
                    }
                }
            }
            for i in 0..n {
                v[(i, k)] = 0.0;
            }
            v[(k, k)] = 1.0;
        }
    }

    let rot_cols = |mat: &mut DenseMatrix, j1: usize, j2: usize, cs: f64, sn: f64| {
        let (x, y) = mat.two_cols_mut(j1, j2);
        for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
            let t = cs * *xi + sn * *yi;
            *yi = -sn * *xi + cs * *yi;
            *xi = t;
        }
    };

    let pp = p - 1;
    let eps = f64::EPSILON;
    let tiny = libm::exp2(-966.0);
    let mut sweeps = 0usize;
    let max_sweeps = MAX_SWEEPS_PER_VALUE * n.max(1);
    while p > 0 {
        // k = largest index below p-1 with negligible e[k]; -1 if none.
        let mut k: isize = p as isize - 2;
        while k >= 0 {
            let ku = k as usize;
            if e[ku].abs() <= tiny + eps * (s[ku].abs() + s[ku + 1].abs()) {
                e[ku] = 0.0;
                break;
            }
            k -= 1;
        }
        let kase;
        if k == p as isize - 2 {
            kase = 4;
        } else {
            let mut ks: isize = p as isize - 1;
            while ks > k {
                let ksu = ks as usize;
                let t =
                    (if ksu != p { e[ksu].abs() } else { 0.0 }) + (if ks != k + 1 { e[ksu - 1].abs() } else { 0.0 });
                if s[ksu].abs() <= tiny + eps * t {
                    s[ksu] = 0.0;
                    break;
                }
                ks -= 1;
            }
            if ks == k {
                kase = 3;
            } else if ks == p as isize - 1 {
                kase = 1;
            } else {
                kase = 2;
                k = ks;
            }
        }
        let k = (k + 1) as usize;

        match kase {
            1 => {
                let mut f = e[p - 2];
                e[p - 2] = 0.0;
                let mut j = p - 2;
                loop {
                    let t = hypot(s[j], f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    if j != k {
                        f = -sn * e[j - 1];
                        e[j - 1] *= cs;
                    }
                    if want_v {
                        rot_cols(&mut v, j, p - 1, cs, sn);
                    }
                    if j == k {
                        break;
                    }
                    j -= 1;
                }
            }
            2 => {
                let mut f = e[k - 1];
                e[k - 1] = 0.0;
                for j in k..p {
                    let t = hypot(s[j], f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    f = -sn * e[j];
                    e[j] *= cs;
                    if want_u {
                        rot_cols(&mut u, j, k - 1, cs, sn);
                    }
                }
            }
            3 => {
                let scale = s[p - 1].abs().max(s[p - 2].abs()).max(e[p - 2].abs()).max(s[k].abs()).max(e[k].abs());
                let sp = s[p - 1] / scale;
                let spm1 = s[p - 2] / scale;
                let epm1 = e[p - 2] / scale;
                let sk = s[k] / scale;
                let ek = e[k] / scale;
                let b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
                let c = (sp * epm1) * (sp * epm1);
                let mut shift = 0.0;
                if b != 0.0 || c != 0.0 {
                    shift = sqrt(b * b + c);
                    if b < 0.0 {
                        shift = -shift;
                    }
                    shift = c / (b + shift);
                }
                let mut f = (sk + sp) * (sk - sp) + shift;
                let mut g = sk * ek;
                for j in k..p - 1 {
                    let t = hypot(f, g);
                    let cs = f / t;
                    let sn = g / t;
                    if j != k {
                        e[j - 1] = t;
                    }
                    f = cs * s[j] + sn * e[j];
                    e[j] = cs * e[j] - sn * s[j];
                    g = sn * s[j + 1];
                    s[j + 1] *= cs;
                    if want_v {
                        rot_cols(&mut v, j, j + 1, cs, sn);
                    }
                    let t = hypot(f, g);
                    let cs = f / t;
                    let sn = g / t;
                    s[j] = t;
                    f = cs * e[j] + sn * s[j + 1];
                    s[j + 1] = -sn * e[j] + cs * s[j + 1];
                    g = sn * e[j + 1];
                    e[j + 1] *= cs;
                    if want_u && j < m - 1 {
                        rot_cols(&mut u, j, j + 1, cs, sn);
                    }
                }
                e[p - 2] = f;
                sweeps += 1;
                if sweeps > max_sweeps {
                    // Give up on this value: accept it as converged.
                    e[p - 2] = 0.0;
                }
            }
            _ => {
                let mut k = k;
                if s[k] <= 0.0 {
                    s[k] = if s[k] < 0.0 { -s[k] } else { 0.0 };
                    if want_u {
                        for x in u.col_mut(k) {
                            *x = -*x;
                        }
                    }
                }
                while k < pp {
                    if s[k] >= s[k + 1] {
                        break;
                    }
                    s.swap(k, k + 1);
                    if want_v && k < n - 1 {
                        v.swap_cols(k, k + 1);
                    }
                    if want_u && k < m - 1 {
                        u.swap_cols(k, k + 1);
                    }
                    k += 1;
                }
                sweeps = 0;
                p -= 1;
            }
        }
    }

    s.truncate(n);
    (s, want_u.then_some(u), want_v.then_some(v))
}
