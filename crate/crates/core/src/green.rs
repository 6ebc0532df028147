//! Green's functions of finite windows from Dirichlet determinants.
//!
//! For `G = (H_Λ − E)^{-1}` on a window of length `N` (local indices):
//!
//! ```text
//! j < k:  G(j,k) = f_[0,j-1] · Π_{i=j+1}^{k} b(z+iω)  · f_[k+1,N-1] / f_[0,N-1]
//! j > k:  G(j,k) = f_[0,k-1] · Π_{i=k+1}^{j} b̃(z+iω) · f_[j+1,N-1] / f_[0,N-1]
//! j = k:  G(j,j) = f_[0,j-1] · f_[j+1,N-1] / f_[0,N-1]
//! ```
//!
//! with empty determinants equal to 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{window, JacobiWindow};
use crate::sampling::SamplingPair;
use crate::scaled::ScaledValue;
use crate::tridiag::sturm_count;

/// Relative distance to the spectrum below which the resolvent is refused.
pub const SINGULAR_FLOOR: f64 = 1e-10;
/// Green entries are only materialised when `|log|G|| ≤ MATERIALIZE_LIMIT`.
pub const MATERIALIZE_LIMIT: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaCase {
    Upper,
    Lower,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEntry {
    pub j: usize,
    pub k: usize,
    pub value: ScaledValue,
    pub case: FormulaCase,
}

impl GreenEntry {
    pub fn materialize(&self) -> Option<Complex64> {
        self.value.materialize(MATERIALIZE_LIMIT)
    }
}

/// Log-magnitude and phase prefix products of a coupling sequence.
#[derive(Debug, Clone)]
struct CouplingProducts {
    log: Vec<f64>,
    phase: Vec<Complex64>,
    zeros: Vec<usize>,
}

impl CouplingProducts {
    fn new(values: impl Iterator<Item = Complex64>) -> Self {
        let mut log = vec![0.0];
        let mut phase = vec![Complex64::new(1.0, 0.0)];
        let mut zeros = vec![0];
        for v in values {
            let m = v.norm();
            let (l, p, z) = (*log.last().unwrap(), *phase.last().unwrap(), *zeros.last().unwrap());
            if m == 0.0 {
                log.push(l);
                phase.push(p);
                zeros.push(z + 1);
            } else {
                let q = p * (v / m);
                log.push(l + m.ln());
                phase.push(q / q.norm());
                zeros.push(z);
            }
        }
        Self { log, phase, zeros }
    }

    /// Product of entries `[from, to)`.
    fn range(&self, from: usize, to: usize) -> ScaledValue {
        if self.zeros[to] != self.zeros[from] {
            return ScaledValue::ZERO;
        }
        ScaledValue::from_polar(self.log[to] - self.log[from], self.phase[to] / self.phase[from])
    }
}

/// Resolvent of a window at a fixed energy, entries by the Cramer formulas.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    n: usize,
    prefix: Vec<ScaledValue>,
    suffix: Vec<ScaledValue>,
    up: CouplingProducts,
    low: CouplingProducts,
}

impl GreenFunction {
    /// Refuses energies within `floor · scale` of a real-phase window's spectrum
    /// (and exact zeros of the determinant otherwise).
    pub fn with_floor(w: &JacobiWindow, energy: Complex64, floor: f64) -> Result<Self> {
        if w.is_real_phase() && energy.im.abs() < floor * w.scale() {
            let red = w.real_reduction();
            let delta = floor * w.scale();
            let below = sturm_count(&red.diag, &red.off, energy.re - delta);
            let above = sturm_count(&red.diag, &red.off, energy.re + delta);
            if above > below {
                return Err(Error::SingularResolvent { energy: energy.re, floor: delta });
            }
        }
        let prefix = w.prefix_determinants(energy);
        if prefix[w.len()].is_zero() {
            return Err(Error::SingularResolvent { energy: energy.re, floor: 0.0 });
        }
        Ok(Self {
            n: w.len(),
            prefix,
            suffix: w.suffix_determinants(energy),
            up: CouplingProducts::new(w.upper.iter().map(|u| -u)),
            low: CouplingProducts::new(w.lower.iter().map(|l| -l)),
        })
    }

    pub fn new(w: &JacobiWindow, energy: Complex64) -> Result<Self> {
        Self::with_floor(w, energy, SINGULAR_FLOOR)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `f_[0,N-1](E)`.
    pub fn determinant(&self) -> ScaledValue {
        self.prefix[self.n]
    }

    /// Determinant of the sites `[m, N-1]` (1 when empty).
    fn right(&self, m: usize) -> ScaledValue {
        self.suffix[self.n - m]
    }

    pub fn entry(&self, j: usize, k: usize) -> GreenEntry {
        assert!(j < self.n && k < self.n, "index out of range");
        let det = self.determinant();
        let (value, case) = if j < k {
            (self.prefix[j] * self.up.range(j, k) * self.right(k + 1) / det, FormulaCase::Upper)
        } else if j > k {
            (self.prefix[k] * self.low.range(k, j) * self.right(j + 1) / det, FormulaCase::Lower)
        } else {
            (self.prefix[j] * self.right(j + 1) / det, FormulaCase::Diagonal)
        };
        GreenEntry { j, k, value, case }
    }

    /// Dense row-major matrix (only for windows whose entries materialise).
    pub fn dense(&self) -> Option<Vec<Vec<Complex64>>> {
        (0..self.n)
            .map(|j| (0..self.n).map(|k| self.entry(j, k).materialize()).collect::<Option<Vec<_>>>())
            .collect()
    }
}

/// `G_N(x, ω, E)(j, k)` on `[0, N-1]`.
pub fn green_entry(pair: &SamplingPair, x: f64, omega: f64, n: usize, energy: Complex64, j: usize, k: usize) -> Result<GreenEntry> {
    let w = window(pair, x, omega, n)?;
    if j >= n || k >= n {
        return Err(Error::InvalidInput(format!("entry ({j}, {k}) outside a window of length {n}")));
    }
    Ok(GreenFunction::new(&w, energy)?.entry(j, k))
}

/// Poisson residuals are refused when `E` is within this fraction of the
/// window scale from the spectrum of the sub-window.
pub const POISSON_FLOOR: f64 = 1e-5;

/// `|ψ(m) + G(m,a)·H(a,a−1)·ψ(a−1) + G(m,b)·H(b,b+1)·ψ(b+1)|` with `G` the
/// resolvent of the sub-window `[a, b]` and out-of-window values of `ψ` taken
/// as 0. For `b ≡ 1` the coupling entries are `−1` and this is the familiar
/// `ψ(m) − G(m,a)ψ(a−1) − G(m,b)ψ(b+1)`.
pub fn poisson_residual(w: &JacobiWindow, psi: &[Complex64], energy: f64, sub: (usize, usize), m: usize) -> Result<f64> {
    poisson_residual_with_floor(w, psi, energy, sub, m, POISSON_FLOOR)
}

pub fn poisson_residual_with_floor(w: &JacobiWindow, psi: &[Complex64], energy: f64, sub: (usize, usize), m: usize, floor: f64) -> Result<f64> {
    let (a, b) = sub;
    if psi.len() != w.len() || b < a || b >= w.len() || m < a || m > b {
        return Err(Error::InvalidInput(format!("sub-window [{a}, {b}] / point {m} incompatible with window of length {}", w.len())));
    }
    if a == 0 && b + 1 == w.len() {
        // no boundary terms: the formula is the eigenvalue equation itself
        return Ok(0.0);
    }
    let sw = w.sub_window(a, b)?;
    let scale_floor = floor * w.scale() / sw.scale();
    let g = GreenFunction::with_floor(&sw, Complex64::new(energy, 0.0), scale_floor)?;
    let local = m - a;
    let mut value = psi[m];
    if a > 0 {
        let coupling = ScaledValue::from(w.lower[a - 1] * psi[a - 1]);
        value += (g.entry(local, 0).value * coupling).to_complex();
    }
    if b + 1 < w.len() {
        let coupling = ScaledValue::from(w.upper[b] * psi[b + 1]);
        value += (g.entry(local, b - a).value * coupling).to_complex();
    }
    Ok(value.norm())
}

/// Outcome of checking `|G(j,k)| ≤ exp(−γ|k−j| + K)` on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    /// `log|f_N(E)| ≥ N·L_N^a − K/2`; otherwise the bound is not claimed.
    pub applicable: bool,
    pub holds: bool,
    /// `max_{j,k} log|G(j,k)| + γ|k−j| − K`.
    pub max_violation: f64,
    pub log_det: f64,
    pub gamma: f64,
    pub k: f64,
}

/// `γ` should be the measured `L_N − D_N` and `la` the measured `L_N^a` at the same scale.
pub fn decay_certificate(pair: &SamplingPair, x: f64, omega: f64, n: usize, energy: f64, k: f64, gamma: f64, la: f64) -> Result<DecayCertificate> {
    let w = window(pair, x, omega, n)?;
    let g = GreenFunction::new(&w, Complex64::new(energy, 0.0))?;
    let log_det = g.determinant().log_magnitude();
    let applicable = log_det >= n as f64 * la - 0.5 * k;
    let mut worst = f64::NEG_INFINITY;
    for j in 0..n {
        for kk in 0..n {
            let e = g.entry(j, kk);
            let v = e.value.log_magnitude() + gamma * j.abs_diff(kk) as f64 - k;
            worst = worst.max(v);
        }
    }
    Ok(DecayCertificate { applicable, holds: worst <= 0.0, max_violation: worst, log_det, gamma, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::eigensystem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GOLDEN: f64 = crate::frequency::GOLDEN;

    #[test]
    fn one_site() {
        let pair = SamplingPair::almost_mathieu(1.5);
        let e = Complex64::new(0.25, 0.0);
        let g = green_entry(&pair, 0.1, GOLDEN, 1, e, 0, 0).unwrap();
        let expect = 1.0 / (pair.a_at(Complex64::new(0.1, 0.0)) - e);
        assert!((g.materialize().unwrap() - expect).norm() < 1e-14);
        assert_eq!(g.case, FormulaCase::Diagonal);
    }

    #[test]
    fn resolvent_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2, 5, 9, 16] {
            let pair = SamplingPair::random(&mut rng, 3);
            let w = window(&pair, 0.77, GOLDEN, n).unwrap();
            let e = Complex64::new(0.123, 0.0);
            let g = GreenFunction::new(&w, e).unwrap().dense().unwrap();
            let h = w.to_dense();
            for r in 0..n {
                for c in 0..n {
                    let s: Complex64 = (0..n).map(|t| (h[r][t] - if r == t { e } else { 0.0.into() }) * g[t][c]).sum();
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((s - expect).norm() < 1e-8, "n={n} ({r},{c}) {s}");
                }
            }
            for r in 0..n {
                for c in 0..n {
                    assert!((g[r][c] - g[c][r].conj()).norm() < 1e-9 * (1.0 + g[r][c].norm()));
                }
            }
        }
    }

    #[test]
    fn singular_energy_flagged() {
        let pair = SamplingPair::almost_mathieu(2.0);
        let w = window(&pair, 0.3, GOLDEN, 6).unwrap();
        let sd = eigensystem(&w).unwrap();
        let err = GreenFunction::new(&w, Complex64::new(sd.eigenvalues[2], 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularResolvent { .. }));
    }

    #[test]
    fn poisson_full_window_and_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pair = SamplingPair::random(&mut rng, 2);
        let n = 32;
        let w = window(&pair, 0.05, GOLDEN, n).unwrap();
        let sd = eigensystem(&w).unwrap();
        let j = 11;
        let e = sd.eigenvalues[j];
        let psi = &sd.eigenvectors[j];
        assert_eq!(poisson_residual(&w, psi, e, (0, n - 1), 4).unwrap(), 0.0);
        let mut checked = 0;
        for a in 1..n - 9 {
            match poisson_residual(&w, psi, e, (a, a + 7), a + 3) {
                Ok(r) => {
                    assert!(r <= 1e-8, "a={a} r={r}");
                    checked += 1;
                }
                Err(Error::SingularResolvent { .. }) => {}
                Err(other) => panic!("{other}"),
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn poisson_residual_is_linear_in_perturbation() {
        let pair = SamplingPair::almost_mathieu(3.0);
        let n = 24;
        let w = window(&pair, 0.2, GOLDEN, n).unwrap();
        let sd = eigensystem(&w).unwrap();
        let e = sd.eigenvalues[5];
        let psi = sd.eigenvectors[5].clone();
        let sub = (6, 14);
        let base = poisson_residual(&w, &psi, e, sub, 10).unwrap();
        let mut r = Vec::new();
        for eps in [1e-6, 2e-6, 4e-6] {
            let mut p = psi.clone();
            p[10] += eps;
            r.push(poisson_residual(&w, &p, e, sub, 10).unwrap() - base);
        }
        assert!((r[1] / r[0] - 2.0).abs() < 1e-3);
        assert!((r[2] / r[1] - 2.0).abs() < 1e-3);
    }
}
