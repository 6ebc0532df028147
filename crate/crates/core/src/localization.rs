//! Localization centers, tail masses, decay fits and restricted spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::operator::{build_window, eigensystem, eigenvalues, window, Interval};
use crate::sampling::SamplingPair;

/// Entries below this modulus are ignored by the decay fit.
pub const FIT_FLOOR: f64 = 1e-14;
/// Entries closer than this to the center are ignored by the decay fit.
pub const FIT_MIN_DISTANCE: usize = 5;

/// `argmax_n |ψ(n)|`, smallest index on ties.
pub fn localization_center(psi: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, v) in psi.iter().enumerate() {
        let m = v.norm_sqr();
        if m > best_val {
            best = k;
            best_val = m;
        }
    }
    best
}

/// `Σ_{k ∈ [lo, hi]} |ψ(k)|²`.
pub fn window_mass(psi: &[Complex64], lo: usize, hi: usize) -> f64 {
    psi[lo..=hi.min(psi.len() - 1)].iter().map(|v| v.norm_sqr()).sum()
}

/// Tail masses outside `[center − Q, center + Q]`, monotone in `Q` by
/// construction (cumulative sums from both ends).
#[derive(Debug, Clone)]
pub struct TailMasses {
    center: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl TailMasses {
    pub fn new(psi: &[Complex64], center: usize) -> Self {
        let n = psi.len();
        let mut left = vec![0.0; n + 1];
        for k in 0..n {
            left[k + 1] = left[k] + psi[k].norm_sqr();
        }
        // right[i] = Σ_{k ≥ n − i} |ψ(k)|²
        let mut right = vec![0.0; n + 1];
        for i in 0..n {
            right[i + 1] = right[i] + psi[n - 1 - i].norm_sqr();
        }
        Self { center, left, right }
    }

    pub fn at(&self, q: usize) -> f64 {
        let n = self.left.len() - 1;
        let lo = self.center.saturating_sub(q);
        let hi = (self.center + q).min(n - 1);
        self.left[lo] + self.right[n - 1 - hi]
    }
}

/// Mass of `ψ` outside `[center − Q, center + Q] ∩ [0, N−1]`.
pub fn tail_mass(psi: &[Complex64], center: usize, q: usize) -> f64 {
    TailMasses::new(psi, center).at(q)
}

/// Decay rate `−slope` of the least-squares line through `log|ψ(k)|` against
/// `|k − center|`, using entries with `|ψ| > FIT_FLOOR` at distance at least
/// `FIT_MIN_DISTANCE`. `None` with fewer than five usable points.
pub fn fitted_rate(psi: &[Complex64], center: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = psi
        .iter()
        .enumerate()
        .filter(|(k, v)| k.abs_diff(center) >= FIT_MIN_DISTANCE && v.norm() > FIT_FLOOR)
        .map(|(k, v)| (k.abs_diff(center) as f64, v.norm().ln()))
        .collect();
    if pts.len() < 5 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(-sxy / sxx)
}

/// `dist(E, spec H_Λ(x, ω))`.
pub fn restriction_distance(pair: &SamplingPair, x: f64, omega: f64, energy: f64, interval: Interval) -> Result<f64> {
    let w = build_window(pair, Complex64::new(x, 0.0), omega, interval)?;
    Ok(eigenvalues(&w)?.iter().map(|e| (e - energy).abs()).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub j: usize,
    pub energy: f64,
    pub center: usize,
    /// `[center − Q, center + Q] ∩ [0, N−1]`.
    pub window: Interval,
    pub q: usize,
    pub tail_mass: Vec<(usize, f64)>,
    pub fitted_rate: Option<f64>,
    pub restriction_distance: f64,
}

/// Profiles of every eigenvector of `H^{(N)}(x, ω)`.
pub fn profiles(pair: &SamplingPair, x: f64, omega: f64, n: usize, q: usize, tail_qs: &[usize]) -> Result<Vec<LocalizationProfile>> {
    let w = window(pair, x, omega, n)?;
    let sd = eigensystem(&w)?;
    (0..n)
        .map(|j| {
            let psi = &sd.eigenvectors[j];
            let center = localization_center(psi);
            let tails = TailMasses::new(psi, center);
            let lo = center.saturating_sub(q);
            let hi = (center + q).min(n - 1);
            let interval = Interval { lo: lo as i64, hi: hi as i64 };
            let sub = w.sub_window(lo, hi)?;
            let e = sd.eigenvalues[j];
            let restriction_distance = eigenvalues(&sub)?.iter().map(|v| (v - e).abs()).fold(f64::INFINITY, f64::min);
            Ok(LocalizationProfile {
                j,
                energy: e,
                center,
                window: interval,
                q,
                tail_mass: tail_qs.iter().map(|&t| (t, tails.at(t))).collect(),
                fitted_rate: fitted_rate(psi, center),
                restriction_distance,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    pub j1: usize,
    pub j2: usize,
    pub gap: f64,
    pub nu1: usize,
    pub nu2: usize,
    /// `|E_{j1} − E_{j2}| > σ/2`: nothing to test.
    pub vacuous: bool,
    /// The implication `|E_{j1} − E_{j2}| ≤ σ/2 ⇒ |ν_{j1} − ν_{j2}| < 2Q` holds.
    pub holds: bool,
}

fn proximity_from(values: &[f64], centers: &[usize], j1: usize, j2: usize, sigma: f64, q: usize) -> Proximity {
    let gap = (values[j1] - values[j2]).abs();
    let (nu1, nu2) = (centers[j1], centers[j2]);
    let vacuous = gap > 0.5 * sigma;
    let holds = vacuous || nu1.abs_diff(nu2) < 2 * q;
    Proximity { j1, j2, gap, nu1, nu2, vacuous, holds }
}

pub fn center_proximity(pair: &SamplingPair, x: f64, omega: f64, n: usize, j1: usize, j2: usize, sigma: f64, q: usize) -> Result<Proximity> {
    let sd = eigensystem(&window(pair, x, omega, n)?)?;
    let centers: Vec<usize> = sd.eigenvectors.iter().map(|p| localization_center(p)).collect();
    Ok(proximity_from(&sd.eigenvalues, &centers, j1, j2, sigma, q))
}

/// All pairs `j1 < j2` with `|E_{j1} − E_{j2}| ≤ σ/2` whose centers are at
/// least `2Q` apart. These are resonance candidates, not failures.
pub fn proximity_sweep(pair: &SamplingPair, x: f64, omega: f64, n: usize, sigma: f64, q: usize) -> Result<Vec<Proximity>> {
    let sd = eigensystem(&window(pair, x, omega, n)?)?;
    let centers: Vec<usize> = sd.eigenvectors.iter().map(|p| localization_center(p)).collect();
    let mut out = Vec::new();
    for j1 in 0..n {
        for j2 in j1 + 1..n {
            if sd.eigenvalues[j2] - sd.eigenvalues[j1] > 0.5 * sigma {
                break;
            }
            let p = proximity_from(&sd.eigenvalues, &centers, j1, j2, sigma, q);
            if !p.holds {
                out.push(p);
            }
        }
    }
    Ok(out)
}
