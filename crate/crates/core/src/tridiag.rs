//! Real symmetric tridiagonal eigensolvers.
//!
//! * [`ql_implicit`]: implicit QL with Wilkinson-type shifts, optionally
//!   accumulating eigenvectors (the EISPACK `tql2` scheme).
//! * [`sturm_count`] / [`kth_eigenvalue`]: Sturm-sequence bisection for a
//!   single eigenvalue.
//! * [`inverse_iteration`]: eigenvector for a known eigenvalue.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// `sqrt(a² + b²)`; falls back to `hypot` when the squares could overflow or underflow.
#[inline]
fn pythag(a: f64, b: f64) -> f64 {
    let s = a * a + b * b;
    if s.is_finite() && s > 1e-290 {
        s.sqrt()
    } else {
        a.hypot(b)
    }
}

/// Eigenvalues (ascending) and, if requested, eigenvectors as columns of a
/// column-major `n × n` array.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
}

impl TridiagEigen {
    pub fn vector(&self, j: usize) -> Option<&[f64]> {
        let n = self.values.len();
        self.vectors.as_ref().map(|v| &v[j * n..(j + 1) * n])
    }
}

/// Implicit QL on the matrix with diagonal `diag` and off-diagonal `off`
/// (`off[i]` couples `i` and `i + 1`).
pub fn ql_implicit(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<TridiagEigen> {
    let n = diag.len();
    assert!(off.len() + 1 == n || (n == 0 && off.is_empty()), "off-diagonal length mismatch");
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    let mut z = if want_vectors {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        Some(z)
    } else {
        None
    };

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::NoConvergence { block_start: l, block_len: m - l + 1 });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = pythag(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_mut() {
                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_next = &mut right[..n];
                    for k in 0..n {
                        let f = col_next[k];
                        col_next[k] = s * col_i[k] + c * f;
                        col_i[k] = c * col_i[k] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort ascending, carrying vectors along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = z.map(|z| {
        let mut out = vec![0.0; n * n];
        for (dst, &src) in order.iter().enumerate() {
            out[dst * n..(dst + 1) * n].copy_from_slice(&z[src * n..(src + 1) * n]);
        }
        out
    });
    Ok(TridiagEigen { values, vectors })
}

/// Number of eigenvalues strictly below `lambda`.
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let scale = diag.iter().chain(off.iter()).fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * scale * scale);
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - lambda - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the spectrum.
pub fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `k`-th eigenvalue (0-based, ascending) by Sturm bisection.
pub fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    assert!(k < diag.len());
    let (lo, hi) = gershgorin(diag, off);
    let pad = f64::EPSILON * (lo.abs().max(hi.abs()).max(1.0)) * 4.0;
    bisect_kth(diag, off, k, lo - pad, hi + pad)
}

/// As [`kth_eigenvalue`], starting from `[lo, hi]` when it brackets the
/// eigenvalue and from the Gershgorin interval otherwise.
pub fn kth_eigenvalue_bracketed(diag: &[f64], off: &[f64], k: usize, lo: f64, hi: f64) -> f64 {
    assert!(k < diag.len());
    if lo < hi && sturm_count(diag, off, lo) <= k && sturm_count(diag, off, hi) > k {
        bisect_kth(diag, off, k, lo, hi)
    } else {
        kth_eigenvalue(diag, off, k)
    }
}

fn bisect_kth(diag: &[f64], off: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Unit eigenvector for an (accurately known) eigenvalue by inverse
/// iteration with a partially pivoted tridiagonal LU.
pub fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag.iter().chain(off.iter()).fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;

    // LU of (T - λ) with row interchanges (LAPACK gttrf layout).
    let mut dl = off.to_vec();
    let mut d: Vec<f64> = diag.iter().map(|v| v - lambda).collect();
    let mut du = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n - 1];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    for v in d.iter_mut() {
        if v.abs() < tiny {
            *v = tiny.copysign(*v);
        }
    }

    let solve = |rhs: &mut [f64]| {
        // forward: apply L^{-1} with interchanges
        for i in 0..n - 1 {
            if swapped[i] {
                rhs.swap(i, i + 1);
            }
            rhs[i + 1] -= dl[i] * rhs[i];
        }
        // back substitution with U
        rhs[n - 1] /= d[n - 1];
        if n > 1 {
            rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
        }
    };

    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919 % 17) as f64 / 17.0)).collect();
    for _ in 0..3 {
        solve(&mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    // fix the sign so the largest entry is positive
    let (imax, _) = x.iter().enumerate().fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    if x[imax] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_laplacian_spectrum() {
        let n = 20;
        let diag = vec![0.0; n];
        let off = vec![1.0; n - 1];
        let eig = ql_implicit(&diag, &off, true).unwrap();
        for (j, &v) in eig.values.iter().enumerate() {
            let expected = 2.0 * (PI * (n - j) as f64 / (n + 1) as f64).cos();
            assert!((v - expected).abs() < 1e-13, "{j}: {v} vs {expected}");
        }
        // orthonormal columns
        let z = eig.vectors.as_ref().unwrap();
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|k| z[a * n + k] * z[b * n + k]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bisection_and_sturm_agree_with_ql() {
        let diag = vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.5];
        let off = vec![0.3, 1.2, -0.7, 0.01, 2.0];
        let eig = ql_implicit(&diag, &off, false).unwrap();
        for (k, &v) in eig.values.iter().enumerate() {
            assert!((kth_eigenvalue(&diag, &off, k) - v).abs() < 1e-13);
            assert_eq!(sturm_count(&diag, &off, v - 1e-9), k);
        }
    }

    #[test]
    fn inverse_iteration_recovers_vector() {
        let diag = vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.5];
        let off = vec![0.3, 1.2, -0.7, 0.01, 2.0];
        let eig = ql_implicit(&diag, &off, true).unwrap();
        for k in 0..diag.len() {
            let v = inverse_iteration(&diag, &off, eig.values[k]);
            let w = eig.vector(k).unwrap();
            let overlap: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            assert!((overlap.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_by_one_and_zero_couplings() {
        let eig = ql_implicit(&[4.0], &[], true).unwrap();
        assert_eq!(eig.values, vec![4.0]);
        let eig = ql_implicit(&[1.0, 3.0, 2.0], &[0.0, 0.0], false).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
    }
}
