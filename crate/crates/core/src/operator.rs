//! Finite windows `H_Λ(z, ω)`, their eigensystems and analytic determinants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SamplingPair;
use crate::scaled::{binary_exponent, scale_pow2, ScaledValue};
use crate::tridiag::{self, ql_implicit};

/// Couplings below `SPLIT_TOL · scale` split the window into blocks.
pub const SPLIT_TOL: f64 = 1e-13;

/// Phase of site `k`: `z + kω`.
#[inline]
pub fn site_phase(z: Complex64, omega: f64, k: i64) -> Complex64 {
    Complex64::new(z.re + k as f64 * omega, z.im)
}

/// Integer interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            Err(Error::EmptyInterval { lo, hi })
        } else {
            Ok(Self { lo, hi })
        }
    }

    /// `[0, n-1]`.
    pub fn first(n: usize) -> Result<Self> {
        Self::new(0, n as i64 - 1)
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The tridiagonal matrix `H_Λ(z, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiWindow {
    pub interval: Interval,
    pub z: Complex64,
    pub omega: f64,
    /// `a(z + kω)`, `k ∈ Λ`.
    pub diag: Vec<Complex64>,
    /// `-b(z + (k+1)ω)`: entry `(k, k+1)`.
    pub upper: Vec<Complex64>,
    /// `-b̃(z + (k+1)ω)`: entry `(k+1, k)`.
    pub lower: Vec<Complex64>,
}

pub fn build_window(pair: &SamplingPair, z: Complex64, omega: f64, interval: Interval) -> Result<JacobiWindow> {
    pair.check_strip(z)?;
    let Interval { lo, hi } = Interval::new(interval.lo, interval.hi)?;
    let diag = (lo..=hi).map(|k| pair.a_at(site_phase(z, omega, k))).collect();
    let upper = (lo..hi).map(|k| -pair.b_at(site_phase(z, omega, k + 1))).collect();
    let lower = (lo..hi).map(|k| -pair.tilde_b_at(site_phase(z, omega, k + 1))).collect();
    Ok(JacobiWindow { interval, z, omega, diag, upper, lower })
}

/// Window on `[0, n-1]` at a real phase.
pub fn window(pair: &SamplingPair, x: f64, omega: f64, n: usize) -> Result<JacobiWindow> {
    build_window(pair, Complex64::new(x, 0.0), omega, Interval::first(n)?)
}

impl JacobiWindow {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_real_phase(&self) -> bool {
        self.z.im == 0.0
    }

    /// `max_k |lower_k − conj(upper_k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.upper
            .iter()
            .zip(&self.lower)
            .map(|(u, l)| (l - u.conj()).norm())
            .chain(self.diag.iter().map(|d| d.im.abs()))
            .fold(0.0, f64::max)
    }

    /// `max|diag| + 2 max|off-diagonal|`, an upper bound for `‖H‖`.
    pub fn scale(&self) -> f64 {
        let d = self.diag.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let o = self.upper.iter().chain(&self.lower).fold(0.0f64, |a, z| a.max(z.norm()));
        (d + 2.0 * o).max(f64::MIN_POSITIVE)
    }

    pub fn trace(&self) -> Complex64 {
        self.diag.iter().sum()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.len();
        let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for k in 0..n {
            m[k][k] = self.diag[k];
            if k + 1 < n {
                m[k][k + 1] = self.upper[k];
                m[k + 1][k] = self.lower[k];
            }
        }
        m
    }

    /// `H v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut s = self.diag[k] * v[k];
                if k + 1 < n {
                    s += self.upper[k] * v[k + 1];
                }
                if k > 0 {
                    s += self.lower[k - 1] * v[k - 1];
                }
                s
            })
            .collect()
    }

    /// `‖(H − E) v‖₂`.
    pub fn residual(&self, energy: Complex64, v: &[Complex64]) -> f64 {
        self.apply(v)
            .iter()
            .zip(v)
            .map(|(hv, vk)| (hv - energy * vk).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Sub-window on local indices `[a, b]`.
    pub fn sub_window(&self, a: usize, b: usize) -> Result<JacobiWindow> {
        if b < a || b >= self.len() {
            return Err(Error::EmptyInterval { lo: a as i64, hi: b as i64 });
        }
        Ok(JacobiWindow {
            interval: Interval { lo: self.interval.lo + a as i64, hi: self.interval.lo + b as i64 },
            z: self.z,
            omega: self.omega,
            diag: self.diag[a..=b].to_vec(),
            upper: self.upper[a..b].to_vec(),
            lower: self.lower[a..b].to_vec(),
        })
    }

    /// Diagonal-phase similarity to a real symmetric tridiagonal matrix:
    /// `H = V T V*` with `T` having diagonal `Re a` and off-diagonal `|b|`.
    /// Couplings below the split tolerance are zeroed.
    pub fn real_reduction(&self) -> RealReduction {
        let n = self.len();
        let scale = self.scale();
        let diag: Vec<f64> = self.diag.iter().map(|z| z.re).collect();
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        let mut phases = Vec::with_capacity(n);
        let mut v = Complex64::new(1.0, 0.0);
        phases.push(v);
        for u in &self.upper {
            let m = u.norm();
            if m < SPLIT_TOL * scale {
                off.push(0.0);
            } else {
                v *= u.conj() / m;
                v /= v.norm();
                off.push(m);
            }
            phases.push(v);
        }
        RealReduction { diag, off, phases }
    }
}

#[derive(Debug, Clone)]
pub struct RealReduction {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    /// `ψ_k = phases_k · φ_k` maps eigenvectors of `T` to those of `H`.
    pub phases: Vec<Complex64>,
}

impl RealReduction {
    /// Contiguous blocks `[start, end)` separated by zero couplings.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let n = self.diag.len();
        let mut out = Vec::new();
        let mut start = 0;
        for (k, &e) in self.off.iter().enumerate() {
            if e == 0.0 {
                out.push((start, k + 1));
                start = k + 1;
            }
        }
        if n > 0 {
            out.push((start, n));
        }
        out
    }

    pub fn lift(&self, phi: &[f64]) -> Vec<Complex64> {
        phi.iter().zip(&self.phases).map(|(p, v)| v * *p).collect()
    }
}

/// Eigenvalues (ascending), unit eigenvectors and residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn require_hermitian(w: &JacobiWindow) -> Result<()> {
    if !w.is_real_phase() {
        return Err(Error::InvalidInput("eigensystem requires a real phase (Hermitian window)".into()));
    }
    Ok(())
}

fn solve_blocks(red: &RealReduction, want_vectors: bool) -> Result<Vec<(f64, usize, Option<Vec<f64>>, usize)>> {
    let mut out = Vec::with_capacity(red.diag.len());
    for (bi, &(s, e)) in red.blocks().iter().enumerate() {
        let eig = ql_implicit(&red.diag[s..e], &red.off[s..e - 1], want_vectors)
            .map_err(|_| Error::NoConvergence { block_start: s, block_len: e - s })?;
        for j in 0..eig.values.len() {
            let vec = eig.vector(j).map(|v| v.to_vec());
            out.push((eig.values[j], bi, vec, s));
        }
    }
    // ascending, ties broken by block index
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(out)
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(w: &JacobiWindow) -> Result<Vec<f64>> {
    require_hermitian(w)?;
    let red = w.real_reduction();
    Ok(solve_blocks(&red, false)?.into_iter().map(|t| t.0).collect())
}

/// Full eigensystem of a Hermitian window.
pub fn eigensystem(w: &JacobiWindow) -> Result<SpectralData> {
    require_hermitian(w)?;
    let n = w.len();
    let red = w.real_reduction();
    let solved = solve_blocks(&red, true)?;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for (value, _, vec, start) in solved {
        let block = vec.expect("vectors requested");
        let mut phi = vec![0.0; n];
        phi[start..start + block.len()].copy_from_slice(&block);
        let psi = red.lift(&phi);
        residuals.push(w.residual(Complex64::new(value, 0.0), &psi));
        eigenvalues.push(value);
        eigenvectors.push(psi);
    }
    Ok(SpectralData { eigenvalues, eigenvectors, residuals })
}

/// Single eigenpair `(E_j, ψ_j)` by Sturm bisection and inverse iteration.
pub fn eigenpair(w: &JacobiWindow, j: usize) -> Result<(f64, Vec<Complex64>)> {
    require_hermitian(w)?;
    let red = w.real_reduction();
    if red.off.iter().any(|&e| e == 0.0) {
        let sd = eigensystem(w)?;
        return Ok((sd.eigenvalues[j], sd.eigenvectors[j].clone()));
    }
    let e = tridiag::kth_eigenvalue(&red.diag, &red.off, j);
    let phi = tridiag::inverse_iteration(&red.diag, &red.off, e);
    Ok((e, red.lift(&phi)))
}

/// Prefix determinants `det(H_[0, m-1] − E)` for `m = 0..=n` from the
/// three-term recursion, in scaled arithmetic.
pub fn prefix_determinants(
    diag: &[Complex64],
    upper: &[Complex64],
    lower: &[Complex64],
    energy: Complex64,
) -> Vec<ScaledValue> {
    let n = diag.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push(ScaledValue::ONE);
    // (current, previous) share the exponent `exp`
    let mut cur = Complex64::new(1.0, 0.0);
    let mut prev = Complex64::new(0.0, 0.0);
    let mut exp: i64 = 0;
    for m in 0..n {
        let coupling = if m == 0 { Complex64::new(0.0, 0.0) } else { upper[m - 1] * lower[m - 1] };
        let next = (diag[m] - energy) * cur - coupling * prev;
        prev = cur;
        cur = next;
        let k = binary_exponent(cur.norm().max(prev.norm()));
        if k != 0 {
            cur = scale_pow2(cur, -k);
            prev = scale_pow2(prev, -k);
            exp += k;
        }
        out.push(ScaledValue::from_mantissa(cur, exp));
    }
    out
}

/// Suffix determinants: entry `m` is `det(H_[n-m, n-1] − E)`, `m = 0..=n`.
pub fn suffix_determinants(
    diag: &[Complex64],
    upper: &[Complex64],
    lower: &[Complex64],
    energy: Complex64,
) -> Vec<ScaledValue> {
    let d: Vec<_> = diag.iter().rev().copied().collect();
    let u: Vec<_> = lower.iter().rev().copied().collect();
    let l: Vec<_> = upper.iter().rev().copied().collect();
    prefix_determinants(&d, &u, &l, energy)
}

impl JacobiWindow {
    pub fn prefix_determinants(&self, energy: Complex64) -> Vec<ScaledValue> {
        prefix_determinants(&self.diag, &self.upper, &self.lower, energy)
    }

    pub fn suffix_determinants(&self, energy: Complex64) -> Vec<ScaledValue> {
        suffix_determinants(&self.diag, &self.upper, &self.lower, energy)
    }

    /// `det(H_Λ − E)`.
    pub fn determinant(&self, energy: Complex64) -> ScaledValue {
        *self.prefix_determinants(energy).last().expect("non-empty")
    }
}

/// `f^a_Λ(z, ω, E) = det[H_Λ(z, ω) − E]`; a polynomial of degree `|Λ|` in `E`
/// with leading term `(−E)^{|Λ|}`.
pub fn determinant(pair: &SamplingPair, z: Complex64, omega: f64, interval: Interval, energy: Complex64) -> Result<ScaledValue> {
    Ok(build_window(pair, z, omega, interval)?.determinant(energy))
}

/// `f^a_N(z, ω, E)` on `[0, N-1]`; `N = 0` gives 1.
pub fn determinant_n(pair: &SamplingPair, z: Complex64, omega: f64, n: usize, energy: Complex64) -> Result<ScaledValue> {
    if n == 0 {
        return Ok(ScaledValue::ONE);
    }
    determinant(pair, z, omega, Interval::first(n)?, energy)
}

/// Eigenvector assembled from Dirichlet determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletVector {
    pub values: Vec<Complex64>,
    pub residual: f64,
    /// Residual above [`DIRICHLET_RESIDUAL_TOL`]; typical for clustered eigenvalues.
    pub degraded: bool,
}

pub const DIRICHLET_RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvector for the eigenvalue `energy` of `H^{(N)}(x, ω)` built from the
/// prefix determinants `f_[0, n-1](E)`, weighted by the couplings to the right
/// boundary: `𝔣(n) = f_[0,n-1](E) · Π_{k=n+1}^{N-1} b(x + kω)`. For `b ≡ 1`
/// this is the plain determinant sequence. Assembled in log-scale and
/// normalised once.
pub fn dirichlet_eigenvector(pair: &SamplingPair, x: f64, omega: f64, n: usize, energy: f64) -> Result<DirichletVector> {
    let w = window(pair, x, omega, n)?;
    let spectrum = eigenvalues(&w)?;
    let distance = spectrum.iter().map(|e| (e - energy).abs()).fold(f64::INFINITY, f64::min);
    if distance > 1e-8 * w.scale() {
        return Err(Error::NotAnEigenvalue { energy, distance });
    }
    let e = Complex64::new(energy, 0.0);
    let prefix = w.prefix_determinants(e);
    // weights W_n = Π_{k=n}^{N-2} (−upper_k), built from the right
    let mut weights = vec![ScaledValue::ONE; n];
    for k in (0..n.saturating_sub(1)).rev() {
        weights[k] = weights[k + 1] * ScaledValue::from_complex(-w.upper[k]);
    }
    let raw: Vec<ScaledValue> = (0..n).map(|m| prefix[m] * weights[m]).collect();
    let top = raw.iter().map(|v| v.log_magnitude()).fold(f64::NEG_INFINITY, f64::max);
    let mut values: Vec<Complex64> = raw
        .iter()
        .map(|v| if v.is_zero() { Complex64::new(0.0, 0.0) } else { v.unit() * (v.log_magnitude() - top).exp() })
        .collect();
    let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    let residual = w.residual(e, &values);
    Ok(DirichletVector { values, residual, degraded: residual > DIRICHLET_RESIDUAL_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const GOLDEN: f64 = crate::frequency::GOLDEN;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_site_window() {
        let pair = SamplingPair::almost_mathieu(2.0);
        let w = window(&pair, 0.1, GOLDEN, 1).unwrap();
        assert_eq!(w.len(), 1);
        let sd = eigensystem(&w).unwrap();
        assert!((sd.eigenvalues[0] - 4.0 * (2.0 * PI * 0.1).cos()).abs() < 1e-14);
        let d = determinant_n(&pair, c(0.1, 0.0), GOLDEN, 1, c(0.5, 0.0)).unwrap();
        assert!((d.to_complex() - (pair.a_at(c(0.1, 0.0)) - 0.5)).norm() < 1e-14);
    }

    #[test]
    fn two_site_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pair = SamplingPair::random(&mut rng, 2);
        let z = c(0.37, 0.05);
        let e = c(0.2, -0.4);
        let a0 = pair.a_at(z);
        let a1 = pair.a_at(z + GOLDEN);
        let bb = pair.b_at(z + GOLDEN) * pair.tilde_b_at(z + GOLDEN);
        let d = determinant_n(&pair, z, GOLDEN, 2, e).unwrap().to_complex();
        assert!((d - ((a0 - e) * (a1 - e) - bb)).norm() < 1e-13);

        let x = c(0.37, 0.0);
        let (a0, a1) = (pair.a_at(x).re, pair.a_at(x + GOLDEN).re);
        let b2 = pair.b_at(x + GOLDEN).norm_sqr();
        let mean = 0.5 * (a0 + a1);
        let rad = (0.25 * (a0 - a1).powi(2) + b2).sqrt();
        let sd = eigensystem(&window(&pair, 0.37, GOLDEN, 2).unwrap()).unwrap();
        assert!((sd.eigenvalues[0] - (mean - rad)).abs() < 1e-13);
        assert!((sd.eigenvalues[1] - (mean + rad)).abs() < 1e-13);
    }

    #[test]
    fn hermitian_for_real_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pair = SamplingPair::random(&mut rng, 3);
        let w = window(&pair, 0.81, GOLDEN, 3).unwrap();
        assert!(w.hermitian_defect() < 1e-12);
    }

    #[test]
    fn empty_interval_rejected() {
        let pair = SamplingPair::free();
        assert!(matches!(
            build_window(&pair, c(0.0, 0.0), GOLDEN, Interval { lo: 3, hi: 2 }),
            Err(Error::EmptyInterval { .. })
        ));
    }

    #[test]
    fn shifted_window_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pair = SamplingPair::random(&mut rng, 3);
        let (x, m, l) = (0.23, 17i64, 9usize);
        let shifted = build_window(&pair, c(x, 0.0), GOLDEN, Interval::new(m, m + l as i64 - 1).unwrap()).unwrap();
        let moved = window(&pair, x + m as f64 * GOLDEN, GOLDEN, l).unwrap();
        for (p, q) in shifted.diag.iter().zip(&moved.diag).chain(shifted.upper.iter().zip(&moved.upper)) {
            assert!((p - q).norm() < 1e-12);
        }
        let e1 = eigenvalues(&shifted).unwrap();
        let e2 = eigenvalues(&moved).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_data_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let pair = SamplingPair::random(&mut rng, 3);
            let w = window(&pair, 0.4, GOLDEN, 40).unwrap();
            let sd = eigensystem(&w).unwrap();
            let scale = w.scale();
            assert!(sd.eigenvalues.windows(2).all(|p| p[0] < p[1]));
            assert!(sd.residuals.iter().all(|&r| r <= 1e-10 * scale));
            let trace: f64 = sd.eigenvalues.iter().sum();
            assert!((trace - w.trace().re).abs() <= 1e-9 * 40.0 * scale);
            for i in 0..sd.len() {
                for j in 0..sd.len() {
                    let dot: Complex64 = sd.eigenvectors[i].iter().zip(&sd.eigenvectors[j]).map(|(a, b)| a.conj() * b).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn vanishing_coupling_splits_blocks() {
        // b(x) = 1 + e(x) vanishes at x = 1/2; place the orbit on it.
        let b = crate::sampling::TrigPolynomial::from_pairs([(0, c(1.0, 0.0)), (1, c(1.0, 0.0))], false).unwrap();
        let pair = SamplingPair::new(crate::sampling::TrigPolynomial::cosine(1.0), b, 0.5).unwrap();
        let omega = 0.25;
        // site 2 has phase x + 2ω = 0.5 → upper[1] = -b(0.5) = 0
        let w = window(&pair, 0.0, omega, 5).unwrap();
        let red = w.real_reduction();
        assert_eq!(red.blocks(), vec![(0, 2), (2, 5)]);
        let sd = eigensystem(&w).unwrap();
        assert!(sd.eigenvalues.windows(2).all(|p| p[0] <= p[1]));
        assert!(sd.residuals.iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn leading_term_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pair = SamplingPair::random(&mut rng, 3);
        let n = 12;
        let w = window(&pair, 0.3, GOLDEN, n).unwrap();
        let big = 1e6 * w.scale();
        let f = w.determinant(c(big, 0.0));
        let lead = ScaledValue::from_polar(n as f64 * big.ln(), c(1.0, 0.0));
        assert!(f.relative_error(&lead) < 1e-6);
    }

    #[test]
    fn determinant_vanishes_at_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pair = SamplingPair::random(&mut rng, 2);
        let w = window(&pair, 0.66, GOLDEN, 16).unwrap();
        let sd = eigensystem(&w).unwrap();
        let f_scale = w.determinant(c(w.scale() * 2.0, 0.0)).log_magnitude();
        for &e in &sd.eigenvalues {
            let f = w.determinant(c(e, 0.0));
            assert!(f.log_magnitude() <= (1e-10f64).ln() + f_scale);
        }
    }

    #[test]
    fn dirichlet_vector_small_cases() {
        let pair = SamplingPair::almost_mathieu(1.0);
        let e = pair.a_at(c(0.2, 0.0)).re;
        let v = dirichlet_eigenvector(&pair, 0.2, GOLDEN, 1, e).unwrap();
        assert_eq!(v.values.len(), 1);
        assert!((v.values[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            dirichlet_eigenvector(&pair, 0.2, GOLDEN, 1, e + 1.0),
            Err(Error::NotAnEigenvalue { .. })
        ));
    }

    #[test]
    fn dirichlet_vector_of_free_laplacian() {
        let pair = SamplingPair::free();
        let n = 5;
        let w = window(&pair, 0.0, GOLDEN, n).unwrap();
        for &e in &eigenvalues(&w).unwrap() {
            let v = dirichlet_eigenvector(&pair, 0.0, GOLDEN, n, e).unwrap();
            // E = 2cos θ solves −ψ(n+1) − ψ(n−1) = Eψ(n) with ψ(n) ∝ sin((n+1)(π − θ))
            let theta = PI - (e / 2.0).acos();
            let expected: Vec<f64> = (0..n).map(|k| ((k + 1) as f64 * theta).sin()).collect();
            let norm = expected.iter().map(|v| v * v).sum::<f64>().sqrt();
            let overlap: Complex64 = v.values.iter().zip(&expected).map(|(a, b)| a.conj() * (*b / norm)).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
            assert!(!v.degraded);
        }
    }

    #[test]
    fn dirichlet_vector_matches_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let pair = SamplingPair::random(&mut rng, 3);
            let w = window(&pair, 0.12, GOLDEN, 4).unwrap();
            let sd = eigensystem(&w).unwrap();
            for (j, &e) in sd.eigenvalues.iter().enumerate() {
                let v = dirichlet_eigenvector(&pair, 0.12, GOLDEN, 4, e).unwrap();
                let overlap: Complex64 = v.values.iter().zip(&sd.eigenvectors[j]).map(|(a, b)| a.conj() * b).sum();
                assert!(overlap.norm() >= 1.0 - 1e-8, "overlap {}", overlap.norm());
                assert!(v.residual <= 1e-8);
            }
        }
    }
}
