//! Shift resonances, eigenvalue slopes, slope-based bad sets, elimination
//! scans, gap statistics and empirical large deviations.

pub mod interval;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use interval::{BadSetFile, BadSetMeta, IntervalUnion};

use crate::error::{Error, Result};
use crate::operator::{build_window, eigensystem, eigenvalues, site_phase, window, Interval, JacobiWindow};
use crate::sampling::SamplingPair;
use crate::tridiag::{inverse_iteration, kth_eigenvalue, kth_eigenvalue_bracketed, ql_implicit, sturm_count};
use crate::transfer::{transfer_product, Variant};

/// Eigenvalues closer than `GAP_FLOOR · scale` to a neighbour give unreliable slopes.
pub const GAP_FLOOR: f64 = 1e-8;
/// Largest shift the elimination scan accepts.
pub const DESK_SHIFT_BOUND: i64 = 4096;

/// Minimum `|a_i − b_k|` over two ascending sequences (two-pointer merge).
pub fn min_distance_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut k) = (0, 0);
    let mut best = f64::INFINITY;
    while i < a.len() && k < b.len() {
        best = best.min((a[i] - b[k]).abs());
        if a[i] < b[k] {
            i += 1;
        } else {
            k += 1;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectraDistance {
    pub value: f64,
    /// No eigenvalue of the first window lies in the energy window.
    pub empty: bool,
}

/// `min |E − E′|` over `E ∈ spec H^{(l1)}(x) ∩ [e_lo, e_hi]` and `E′ ∈ spec H^{(l2)}(x + mω)`.
pub fn spectra_distance(pair: &SamplingPair, x: f64, omega: f64, l1: usize, l2: usize, m: i64, energy_window: (f64, f64)) -> Result<SpectraDistance> {
    if l1 == 0 || l2 == 0 {
        return Err(Error::InvalidInput("window lengths must be positive".into()));
    }
    let s1: Vec<f64> = eigenvalues(&window(pair, x, omega, l1)?)?
        .into_iter()
        .filter(|e| *e >= energy_window.0 && *e <= energy_window.1)
        .collect();
    if s1.is_empty() {
        return Ok(SpectraDistance { value: f64::INFINITY, empty: true });
    }
    let s2 = eigenvalues(&window(pair, x + m as f64 * omega, omega, l2)?)?;
    Ok(SpectraDistance { value: min_distance_sorted(&s1, &s2), empty: false })
}

/// `⟨ψ, ∂_x H ψ⟩` for a unit eigenvector of a real-phase window.
fn hellmann_feynman(pair: &SamplingPair, w: &JacobiWindow, psi: &[Complex64]) -> f64 {
    let z = w.z;
    let lo = w.interval.lo;
    let n = psi.len();
    let mut s = 0.0;
    for k in 0..n {
        s += pair.a_prime_at(site_phase(z, w.omega, lo + k as i64)).re * psi[k].norm_sqr();
    }
    let mut cross = 0.0;
    for k in 0..n.saturating_sub(1) {
        let bp = pair.b_prime_at(site_phase(z, w.omega, lo + k as i64 + 1));
        cross += (psi[k].conj() * bp * psi[k + 1]).re;
    }
    s - 2.0 * cross
}

/// One eigenvalue branch sampled at a phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub energy: f64,
    pub slope: f64,
    /// Distance to the nearest other eigenvalue of the window.
    pub gap: f64,
}

impl BranchPoint {
    pub fn degraded(&self, scale: f64) -> bool {
        self.gap < GAP_FLOOR * scale
    }
}

fn gaps_of(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            let left = if j > 0 { values[j] - values[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < n { values[j + 1] - values[j] } else { f64::INFINITY };
            left.min(right)
        })
        .collect()
}

/// `(E_j, ∂_x E_j, gap_j)` for every `j` of a window.
pub fn window_branches(pair: &SamplingPair, w: &JacobiWindow) -> Result<Vec<BranchPoint>> {
    let red = w.real_reduction();
    let (values, vectors): (Vec<f64>, Vec<Vec<Complex64>>) = if red.off.iter().any(|&e| e == 0.0) {
        let sd = eigensystem(w)?;
        (sd.eigenvalues, sd.eigenvectors)
    } else {
        let values = ql_implicit(&red.diag, &red.off, false)
            .map_err(|_| Error::NoConvergence { block_start: 0, block_len: w.len() })?
            .values;
        let vectors = values.iter().map(|&e| red.lift(&inverse_iteration(&red.diag, &red.off, e))).collect();
        (values, vectors)
    };
    let gaps = gaps_of(&values);
    Ok((0..values.len())
        .map(|j| BranchPoint { energy: values[j], slope: hellmann_feynman(pair, w, &vectors[j]), gap: gaps[j] })
        .collect())
}

/// All branches of `H^{(l)}(x, ω)` on `[0, l−1]`.
pub fn branches(pair: &SamplingPair, x: f64, omega: f64, l: usize) -> Result<Vec<BranchPoint>> {
    window_branches(pair, &window(pair, x, omega, l)?)
}

/// Branch `j` at a single phase by bisection and inverse iteration.
pub fn branch_at(pair: &SamplingPair, x: f64, omega: f64, interval: Interval, j: usize) -> Result<BranchPoint> {
    let w = build_window(pair, Complex64::new(x, 0.0), omega, interval)?;
    let n = w.len();
    if j >= n {
        return Err(Error::InvalidInput(format!("branch {j} outside a window of length {n}")));
    }
    let red = w.real_reduction();
    if red.off.iter().any(|&e| e == 0.0) {
        return Ok(window_branches(pair, &w)?[j]);
    }
    let e = kth_eigenvalue(&red.diag, &red.off, j);
    let psi = red.lift(&inverse_iteration(&red.diag, &red.off, e));
    let left = if j > 0 { e - kth_eigenvalue(&red.diag, &red.off, j - 1) } else { f64::INFINITY };
    let right = if j + 1 < n { kth_eigenvalue(&red.diag, &red.off, j + 1) - e } else { f64::INFINITY };
    Ok(BranchPoint { energy: e, slope: hellmann_feynman(pair, &w, &psi), gap: left.min(right) })
}

/// `∂_x E_j` of `H_Λ(x, ω)` by first-order perturbation theory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub energy: f64,
    pub value: f64,
    pub gap: f64,
    /// Gap below `GAP_FLOOR · scale`.
    pub degraded: bool,
}

pub fn eigenvalue_slope(pair: &SamplingPair, x: f64, omega: f64, interval: Interval, j: usize) -> Result<Slope> {
    let scale = build_window(pair, Complex64::new(x, 0.0), omega, interval)?.scale();
    let b = branch_at(pair, x, omega, interval, j)?;
    Ok(Slope { energy: b.energy, value: b.slope, gap: b.gap, degraded: b.degraded(scale) })
}

// ---------------------------------------------------------------------------
// Slope bad sets

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSource {
    /// Grid points with `|∂_x E_j| ≤ 2τ`.
    Grid,
    /// A zero of `∂_x E_j` between two grid points.
    SignChange,
    /// A dip of `|∂_x E_j|` below `2τ` between grid points.
    Dip,
}

/// One interval `I_{j,k}` of small slope and its energy image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeRegion {
    pub j: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub e_lo: f64,
    pub e_hi: f64,
    pub source: RegionSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeBadSet {
    pub tau: f64,
    pub l: usize,
    pub grid: usize,
    pub set: IntervalUnion,
    pub regions: Vec<SlopeRegion>,
    /// Number of regions per branch.
    pub per_branch: Vec<usize>,
    /// Grid samples skipped for near-degeneracy.
    pub excluded_points: usize,
    /// `[min E, max E]` over all sampled branches.
    pub energy_range: (f64, f64),
}

const BISECT_WIDTH: f64 = 1e-10;
const MAX_REFINE: usize = 100;

/// Value and slope of one sorted branch.
#[derive(Debug, Clone, Copy)]
struct Pt {
    e: f64,
    s: f64,
}

struct BranchCtx<'a> {
    pair: &'a SamplingPair,
    omega: f64,
    interval: Interval,
    j: usize,
    tau: f64,
    floor: f64,
}

impl BranchCtx<'_> {
    /// Branch `j` at `x`; `None` when another eigenvalue lies within the gap floor.
    fn at(&self, x: f64, hint: Option<(f64, f64)>) -> Result<Option<Pt>> {
        let w = build_window(self.pair, Complex64::new(x, 0.0), self.omega, self.interval)?;
        let red = w.real_reduction();
        if red.off.iter().any(|&e| e == 0.0) {
            let b = window_branches(self.pair, &w)?[self.j];
            return Ok((b.gap >= self.floor).then_some(Pt { e: b.energy, s: b.slope }));
        }
        let e = match hint {
            Some((lo, hi)) => kth_eigenvalue_bracketed(&red.diag, &red.off, self.j, lo, hi),
            None => kth_eigenvalue(&red.diag, &red.off, self.j),
        };
        let below = sturm_count(&red.diag, &red.off, e - self.floor);
        let above = sturm_count(&red.diag, &red.off, e + self.floor);
        if above - below > 1 {
            return Ok(None);
        }
        let psi = red.lift(&inverse_iteration(&red.diag, &red.off, e));
        Ok(Some(Pt { e, s: hellmann_feynman(self.pair, &w, &psi) }))
    }

    fn g(&self, p: &Pt) -> f64 {
        p.s.abs() - 2.0 * self.tau
    }

    /// Illinois iteration on `f` between `a` (`f > 0`) and `b` (`f ≤ 0`).
    /// Returns the final bracket, or `None` if the branch degenerates inside.
    #[allow(clippy::type_complexity)]
    fn refine(&self, a: (f64, Pt), b: (f64, Pt), f: impl Fn(&Pt) -> f64) -> Result<Option<((f64, Pt), (f64, Pt))>> {
        let ((mut xa, mut pa), (mut xb, mut pb)) = (a, b);
        let (mut fa, mut fb) = (f(&pa), f(&pb));
        let mut last = 0i8;
        for _ in 0..MAX_REFINE {
            if (xb - xa).abs() <= BISECT_WIDTH {
                break;
            }
            let (lo, hi) = (xa.min(xb), xa.max(xb));
            let mut t = (xa * fb - xb * fa) / (fb - fa);
            if !(t > lo && t < hi) {
                t = 0.5 * (xa + xb);
            }
            let pad = (pa.e - pb.e).abs() + 1e-9 * (1.0 + pa.e.abs());
            let hint = (pa.e.min(pb.e) - pad, pa.e.max(pb.e) + pad);
            let Some(pt) = self.at(t, Some(hint))? else {
                return Ok(None);
            };
            let ft = f(&pt);
            if ft > 0.0 {
                xa = t;
                pa = pt;
                fa = ft;
                if last == 1 {
                    fb *= 0.5;
                }
                last = 1;
            } else {
                xb = t;
                pb = pt;
                fb = ft;
                if last == -1 {
                    fa *= 0.5;
                }
                last = -1;
            }
        }
        Ok(Some(((xa, pa), (xb, pb))))
    }

    /// Golden-section minimum of `g` on `[a, b]`.
    fn dip(&self, mut a: f64, mut b: f64) -> Result<Option<(f64, Pt)>> {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (Some(mut pc), Some(mut pd)) = (self.at(c, None)?, self.at(d, None)?) else {
            return Ok(None);
        };
        for _ in 0..60 {
            if (b - a).abs() <= BISECT_WIDTH {
                break;
            }
            if self.g(&pc) < self.g(&pd) {
                b = d;
                d = c;
                pd = pc;
                c = b - r * (b - a);
                let Some(p) = self.at(c, None)? else { return Ok(None) };
                pc = p;
            } else {
                a = c;
                c = d;
                pc = pd;
                d = a + r * (b - a);
                let Some(p) = self.at(d, None)? else { return Ok(None) };
                pd = p;
            }
        }
        Ok(Some(if self.g(&pc) < self.g(&pd) { (c, pc) } else { (d, pd) }))
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    x: f64,
    p: Pt,
    ok: bool,
    bad: bool,
    source: RegionSource,
}

fn branch_regions(ctx: &BranchCtx<'_>, grid: &[(f64, BranchPoint)]) -> Result<(Vec<SlopeRegion>, usize)> {
    let n = grid.len();
    let h = 1.0 / n as f64;
    let ok: Vec<bool> = grid.iter().map(|(_, p)| p.gap >= ctx.floor).collect();
    let excluded = ok.iter().filter(|v| !**v).count();
    let pts: Vec<Pt> = grid.iter().map(|(_, p)| Pt { e: p.energy, s: p.slope }).collect();
    let g: Vec<f64> = pts.iter().map(|p| ctx.g(p)).collect();

    let mut samples: Vec<Sample> = Vec::with_capacity(n + 8);
    for i in 0..n {
        let x = grid[i].0;
        samples.push(Sample { x, p: pts[i], ok: ok[i], bad: ok[i] && g[i] <= 0.0, source: RegionSource::Grid });
        let i1 = (i + 1) % n;
        let x1 = x + h;
        if !(ok[i] && ok[i1]) {
            continue;
        }
        let (s0, s1) = (pts[i].s, pts[i1].s);
        if s0 * s1 < 0.0 {
            if g[i] > 0.0 && g[i1] > 0.0 {
                let sign = s0.signum();
                if let Some(((xa, pa), (xb, pb))) = ctx.refine((x, pts[i]), (x1, pts[i1]), |p| p.s * sign)? {
                    let (xz, pz) = if pa.s.abs() <= pb.s.abs() { (xa, pa) } else { (xb, pb) };
                    let xz = if xz >= 1.0 { xz - 1.0 } else { xz };
                    samples.push(Sample { x: xz, p: pz, ok: true, bad: true, source: RegionSource::SignChange });
                }
            }
            continue;
        }
        // dip of |slope| between samples: local minimum at i1 that a parabola puts near zero
        let i2 = (i + 2) % n;
        if !ok[i2] || g[i1] <= 0.0 || g[i1] > g[i] || g[i1] > g[i2] || s1 * pts[i2].s <= 0.0 {
            continue;
        }
        let curv = g[i] + g[i2] - 2.0 * g[i1];
        let predicted = if curv > 0.0 { g[i1] - (g[i2] - g[i]).powi(2) / (8.0 * curv) } else { g[i1] };
        if predicted > 0.5 * curv {
            continue;
        }
        if let Some((xd, pd)) = ctx.dip(x, x1 + h)? {
            if ctx.g(&pd) <= 0.0 {
                let xd = if xd >= 1.0 { xd - 1.0 } else { xd };
                samples.push(Sample { x: xd, p: pd, ok: true, bad: true, source: RegionSource::Dip });
            }
        }
    }
    samples.sort_by(|a, b| a.x.total_cmp(&b.x));

    let m = samples.len();
    let pad_for = |spacing: f64| 2.0 * ctx.tau * spacing;
    if samples.iter().all(|s| s.bad) {
        let lo = samples.iter().map(|s| s.p.e).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.p.e).fold(f64::NEG_INFINITY, f64::max);
        let region = SlopeRegion { j: ctx.j, x_lo: 0.0, x_hi: 1.0, e_lo: lo - pad_for(h), e_hi: hi + pad_for(h), source: RegionSource::Grid };
        return Ok((vec![region], excluded));
    }
    // walk the circle starting just after a good sample
    let start = (0..m).find(|&i| !samples[i].bad).expect("some good sample") + 1;
    let unroll = |t: usize| {
        let s = samples[(start + t) % m];
        (s.x + ((start + t) / m) as f64, s)
    };
    let mut regions = Vec::new();
    let mut i = 0;
    while i < m {
        if !unroll(i).1.bad {
            i += 1;
            continue;
        }
        let mut k = i;
        while k < m && unroll(k).1.bad {
            k += 1;
        }
        let (x_first, first) = unroll(i);
        let (x_last, last) = unroll(k - 1);
        let (x_prev, prev) = unroll(i + m - 1);
        let x_prev = x_prev - 1.0;
        let (x_next, next) = unroll(k);

        let mut pts: Vec<(f64, f64)> = (i..k).map(|t| {
            let (xx, s) = unroll(t);
            (xx, s.p.e)
        }).collect();
        let mut x_lo = x_first;
        let mut x_hi = x_last;
        if !prev.ok {
            x_lo = x_prev;
            pts.push((x_prev, prev.p.e));
        } else if ctx.g(&first.p) <= 0.0 {
            if let Some((_, (xb, pb))) = ctx.refine((x_prev, prev.p), (x_first, first.p), |p| ctx.g(p))? {
                x_lo = xb;
                pts.push((xb, pb.e));
            } else {
                x_lo = x_prev;
                pts.push((x_prev, prev.p.e));
            }
        }
        if !next.ok {
            x_hi = x_next;
            pts.push((x_next, next.p.e));
        } else if ctx.g(&last.p) <= 0.0 {
            if let Some((_, (xb, pb))) = ctx.refine((x_next, next.p), (x_last, last.p), |p| ctx.g(p))? {
                x_hi = xb;
                pts.push((xb, pb.e));
            } else {
                x_hi = x_next;
                pts.push((x_next, next.p.e));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spacing = pts.windows(2).map(|w| w[1].0 - w[0].0).fold(0.0f64, f64::max);
        let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) - pad_for(spacing);
        let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + pad_for(spacing);
        let source = (i..k).map(|t| unroll(t).1.source).find(|s| *s != RegionSource::Grid).unwrap_or(RegionSource::Grid);
        regions.push(SlopeRegion { j: ctx.j, x_lo: x_lo.rem_euclid(1.0), x_hi: x_hi.rem_euclid(1.0), e_lo: lo, e_hi: hi, source });
        i = k;
    }
    Ok((regions, excluded))
}

/// Bad energies for slope `τ` at window length `l`: the images of
/// `{x : |∂_x E_j(x)| ≤ 2τ}`, joined with `prior` and fattened by `τ`.
/// Off the returned set every sampled branch has `|∂_x E_j| > τ`.
pub fn slope_bad_set(pair: &SamplingPair, omega: f64, l: usize, tau: f64, grid: usize, prior: Option<&IntervalUnion>) -> Result<SlopeBadSet> {
    if grid < 256 {
        return Err(Error::InvalidInput(format!("slope grid {grid} below 256")));
    }
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("tau must be non-negative, got {tau}")));
    }
    let interval = Interval::first(l)?;
    let scale = window(pair, 0.0, omega, l)?.scale().max(pair.operator_norm_bound());
    let samples: Vec<Vec<BranchPoint>> = (0..grid)
        .into_par_iter()
        .map(|i| branches(pair, i as f64 / grid as f64, omega, l))
        .collect::<Result<_>>()?;
    let per_branch_results: Vec<(Vec<SlopeRegion>, usize)> = (0..l)
        .into_par_iter()
        .map(|j| {
            let ctx = BranchCtx { pair, omega, interval, j, tau, floor: GAP_FLOOR * scale };
            let pts: Vec<(f64, BranchPoint)> = (0..grid).map(|i| (i as f64 / grid as f64, samples[i][j])).collect();
            branch_regions(&ctx, &pts)
        })
        .collect::<Result<_>>()?;

    let mut regions = Vec::new();
    let mut per_branch = Vec::with_capacity(l);
    let mut excluded = 0;
    for (r, ex) in per_branch_results {
        per_branch.push(r.len());
        excluded += ex;
        regions.extend(r);
    }
    let images = IntervalUnion::from_intervals(regions.iter().map(|r| (r.e_lo, r.e_hi)))?;
    let joined = match prior {
        Some(p) => images.union(p),
        None => images,
    };
    let e_min = samples.iter().flatten().map(|p| p.energy).fold(f64::INFINITY, f64::min);
    let e_max = samples.iter().flatten().map(|p| p.energy).fold(f64::NEG_INFINITY, f64::max);
    Ok(SlopeBadSet {
        tau,
        l,
        grid,
        set: joined.fatten(tau),
        regions,
        per_branch,
        excluded_points: excluded,
        energy_range: (e_min, e_max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeViolation {
    pub j: usize,
    pub x: f64,
    pub energy: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeVerification {
    pub grid: usize,
    pub checked: usize,
    /// Samples skipped for near-degeneracy.
    pub excluded: usize,
    pub violations: Vec<SlopeViolation>,
}

/// Check `E_j(x) ∉ set ⇒ |∂_x E_j(x)| > τ` on the grid `x_i = i / grid`.
pub fn verify_slope_bad_set(pair: &SamplingPair, omega: f64, l: usize, tau: f64, set: &IntervalUnion, grid: usize) -> Result<SlopeVerification> {
    let scale = window(pair, 0.0, omega, l)?.scale().max(pair.operator_norm_bound());
    let rows: Vec<(usize, usize, Vec<SlopeViolation>)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / grid as f64;
            let mut checked = 0;
            let mut excluded = 0;
            let mut bad = Vec::new();
            for (j, p) in branches(pair, x, omega, l)?.into_iter().enumerate() {
                if p.degraded(scale) {
                    excluded += 1;
                    continue;
                }
                checked += 1;
                if !set.contains(p.energy) && p.slope.abs() <= tau {
                    bad.push(SlopeViolation { j, x, energy: p.energy, slope: p.slope });
                }
            }
            Ok((checked, excluded, bad))
        })
        .collect::<Result<_>>()?;
    let mut out = SlopeVerification { grid, checked: 0, excluded: 0, violations: Vec::new() };
    for (c, e, v) in rows {
        out.checked += c;
        out.excluded += e;
        out.violations.extend(v);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Elimination scan

/// `|E_j^{(l1)}(x) − E_k^{(l2)}(x + mω)| < σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEvent {
    pub x: f64,
    pub m: i64,
    pub l1: usize,
    pub l2: usize,
    pub j: usize,
    pub k: usize,
    pub gap: f64,
    pub energy: f64,
    /// `E_j` lies in the supplied bad set.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Window-length pairs `(l1, l2)`, scanned in this order.
    pub lengths: Vec<(usize, usize)>,
    pub sigma: f64,
    pub q: i64,
    pub m_max: i64,
    pub grid: usize,
    /// Phase offset of the grid, `x_i = (i + offset) / grid`.
    #[serde(default)]
    pub offset: f64,
}

impl ScanParams {
    pub fn single(l: usize, sigma: f64, q: i64, m_max: i64, grid: usize) -> Self {
        Self { lengths: vec![(l, l)], sigma, q, m_max, grid, offset: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub params: ScanParams,
    /// Sorted by `(x, m, length pair, j, k)`.
    pub events: Vec<ResonanceEvent>,
    /// Events with `E_j` outside the bad set.
    pub violations: usize,
    pub shifts: usize,
}

/// Shifts `−M..=−Q` followed by `Q..=M` (a single 0 when `Q = 0`).
pub fn scan_shifts(q: i64, m_max: i64) -> Vec<i64> {
    if m_max < q {
        return Vec::new();
    }
    let q = q.max(0);
    let mut out: Vec<i64> = (q..=m_max).filter(|&m| m != 0).map(|m| -m).rev().collect();
    if q == 0 {
        out.push(0);
    }
    out.extend((q..=m_max).filter(|&m| m != 0));
    out
}

/// Close pairs `(j, k)` with `|a_j − b_k| < σ` in `(j, k)` order.
fn close_pairs(a: &[f64], b: &[f64], sigma: f64, mut emit: impl FnMut(usize, usize, f64)) {
    let mut k0 = 0;
    for (j, &e) in a.iter().enumerate() {
        while k0 < b.len() && b[k0] <= e - sigma {
            k0 += 1;
        }
        let mut k = k0;
        while k < b.len() && b[k] < e + sigma {
            emit(j, k, (e - b[k]).abs());
            k += 1;
        }
    }
}

fn distinct(values: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = values.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Every `(x, m, j, k)` with `Q ≤ |m| ≤ M` and spectral gap below `σ`.
/// Spectra are computed once per window length and shift.
pub fn elimination_scan(pair: &SamplingPair, omega: f64, params: &ScanParams, bad_set: &IntervalUnion) -> Result<ScanReport> {
    if params.m_max > DESK_SHIFT_BOUND {
        return Err(Error::InvalidInput(format!("M = {} exceeds the desk bound {DESK_SHIFT_BOUND}", params.m_max)));
    }
    if params.lengths.is_empty() || params.lengths.iter().any(|&(a, b)| a == 0 || b == 0) || params.grid == 0 {
        return Err(Error::InvalidInput("window lengths and grid must be positive".into()));
    }
    let shifts = scan_shifts(params.q, params.m_max);
    if shifts.is_empty() {
        return Ok(ScanReport { params: params.clone(), events: Vec::new(), violations: 0, shifts: 0 });
    }
    let firsts = distinct(params.lengths.iter().map(|p| p.0));
    let seconds = distinct(params.lengths.iter().map(|p| p.1));
    let slot = |ls: &[usize], l: usize| ls.binary_search(&l).expect("listed length");
    let sigma = params.sigma;
    let per_x: Vec<Vec<ResonanceEvent>> = (0..params.grid)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + params.offset) / params.grid as f64;
            let base: Vec<Vec<f64>> = firsts.iter().map(|&l| eigenvalues(&window(pair, x, omega, l)?)).collect::<Result<_>>()?;
            let mut events = Vec::new();
            for &m in &shifts {
                let xm = x + m as f64 * omega;
                let other: Vec<Vec<f64>> = seconds.iter().map(|&l| eigenvalues(&window(pair, xm, omega, l)?)).collect::<Result<_>>()?;
                for &(l1, l2) in &params.lengths {
                    let s1 = &base[slot(&firsts, l1)];
                    let s2 = &other[slot(&seconds, l2)];
                    close_pairs(s1, s2, sigma, |j, k, gap| {
                        events.push(ResonanceEvent { x, m, l1, l2, j, k, gap, energy: s1[j], excluded: bad_set.contains(s1[j]) });
                    });
                }
            }
            Ok(events)
        })
        .collect::<Result<_>>()?;
    let events: Vec<ResonanceEvent> = per_x.into_iter().flatten().collect();
    let violations = events.iter().filter(|e| !e.excluded).count();
    Ok(ScanReport { params: params.clone(), events, violations, shifts: shifts.len() })
}

impl ScanReport {
    /// The same events labelled against another bad set. Spectra do not
    /// depend on the set, so this equals a rescan on the same grid.
    pub fn reclassify(&self, bad_set: &IntervalUnion) -> ScanReport {
        let events: Vec<ResonanceEvent> = self.events.iter().map(|e| ResonanceEvent { excluded: bad_set.contains(e.energy), ..*e }).collect();
        let violations = events.iter().filter(|e| !e.excluded).count();
        ScanReport { params: self.params.clone(), events, violations, shifts: self.shifts }
    }
}

/// `bad ∪ ⋃ [E_j − σ, E_j + σ]` over the violating events of a scan.
pub fn refine_with_events(bad: &IntervalUnion, events: &[ResonanceEvent], sigma: f64) -> IntervalUnion {
    let extra = IntervalUnion::from_intervals(events.iter().filter(|e| !e.excluded).map(|e| (e.energy, e.energy)))
        .expect("finite energies")
        .fatten(sigma);
    bad.union(&extra)
}

// ---------------------------------------------------------------------------
// Gap statistics

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Bin `[lo, lo + width)` in `log10(gap)`.
    pub lo: f64,
    pub width: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    pub p: f64,
    pub eigenvalues: Vec<f64>,
    pub min_gaps: Vec<f64>,
    /// `1 / (N (ln N)^p)`.
    pub threshold: f64,
    /// Eigenvalues outside the excluded set.
    pub counted: usize,
    pub below_threshold: usize,
    pub below_fraction: f64,
    pub histogram: Vec<HistogramBin>,
}

pub fn separation_threshold(n: usize, p: f64) -> f64 {
    1.0 / (n as f64 * (n as f64).ln().powf(p))
}

const HIST_LO: f64 = -20.0;
const HIST_WIDTH: f64 = 0.5;
const HIST_BINS: usize = 44;

pub fn gap_report(pair: &SamplingPair, x: f64, omega: f64, n: usize, p: f64, excluded: &IntervalUnion) -> Result<GapReport> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("gap report needs N ≥ 2, got {n}")));
    }
    let values = eigenvalues(&window(pair, x, omega, n)?)?;
    let min_gaps = gaps_of(&values);
    let threshold = separation_threshold(n, p);
    let mut counted = 0;
    let mut below = 0;
    let mut histogram: Vec<HistogramBin> =
        (0..HIST_BINS).map(|b| HistogramBin { lo: HIST_LO + b as f64 * HIST_WIDTH, width: HIST_WIDTH, count: 0 }).collect();
    for (e, g) in values.iter().zip(&min_gaps) {
        let t = if *g > 0.0 { g.log10() } else { f64::NEG_INFINITY };
        let b = ((t - HIST_LO) / HIST_WIDTH).floor().clamp(0.0, (HIST_BINS - 1) as f64) as usize;
        histogram[b].count += 1;
        if excluded.contains(*e) {
            continue;
        }
        counted += 1;
        if *g < threshold {
            below += 1;
        }
    }
    let below_fraction = if counted == 0 { 0.0 } else { below as f64 / counted as f64 };
    Ok(GapReport { n, p, eigenvalues: values, min_gaps, threshold, counted, below_threshold: below, below_fraction, histogram })
}

// ---------------------------------------------------------------------------
// Empirical large deviations

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdtReport {
    pub n: usize,
    pub energy: f64,
    pub grid: usize,
    pub c0_proxy: f64,
    /// `L_N^a` on the same grid.
    pub la: f64,
    /// `(H, fraction of x with |log|f_N^a(x)| − N L_N^a| > H (ln N)^{C₀})`.
    pub fractions: Vec<(f64, f64)>,
}

pub fn ldt_empirical(pair: &SamplingPair, omega: f64, energy: f64, n: usize, h_values: &[f64], grid: usize, c0_proxy: f64) -> Result<LdtReport> {
    if grid < 1024 {
        return Err(Error::InvalidInput(format!("LDT grid {grid} below 1024")));
    }
    let e = Complex64::new(energy, 0.0);
    let rows: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let z = Complex64::new(i as f64 / grid as f64, 0.0);
            let norm = transfer_product(pair, z, omega, n, e, Variant::A)?.log_norm();
            let det = window(pair, z.re, omega, n)?.determinant(e).log_magnitude();
            Ok((norm, det))
        })
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let la = crate::numeric::pairwise_mean(&norms) / n as f64;
    let deviations: Vec<f64> = rows.iter().map(|r| (r.1 - n as f64 * la).abs()).collect();
    let unit = (n as f64).ln().powf(c0_proxy);
    let fractions = h_values
        .iter()
        .map(|&h| {
            let t = h * unit;
            (h, deviations.iter().filter(|&&d| d > t).count() as f64 / grid as f64)
        })
        .collect();
    Ok(LdtReport { n, energy, grid, c0_proxy, la, fractions })
}

// ---------------------------------------------------------------------------
// Frequency and truncation stability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub j: usize,
    /// `|∂E_j(ω) − ∂E_j(ω′)| / (l σ_gap^{-1} |ω − ω′|)`, or `None` when skipped.
    pub ratio: Option<f64>,
    pub skipped: Option<String>,
}

pub fn derivative_stability(pair: &SamplingPair, x: f64, omega: f64, omega_prime: f64, l: usize, sigma_gap: f64) -> Result<Vec<StabilityRow>> {
    let here = branches(pair, x, omega, l)?;
    let dw = (omega - omega_prime).abs();
    if dw == 0.0 {
        return Ok((0..l).map(|j| StabilityRow { j, ratio: Some(0.0), skipped: None }).collect());
    }
    let c_est = pair.operator_norm_bound().max(1.0);
    if dw > sigma_gap / (c_est * l as f64) {
        let reason = format!("|ω − ω′| = {dw:e} exceeds σ_gap/(C l)");
        return Ok((0..l).map(|j| StabilityRow { j, ratio: None, skipped: Some(reason.clone()) }).collect());
    }
    let there = branches(pair, x, omega_prime, l)?;
    let unit = l as f64 * dw / sigma_gap;
    Ok((0..l)
        .map(|j| {
            if here[j].gap < sigma_gap {
                StabilityRow { j, ratio: None, skipped: Some(format!("gap {:e} below σ_gap", here[j].gap)) }
            } else {
                StabilityRow { j, ratio: Some((here[j].slope - there[j].slope).abs() / unit), skipped: None }
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub k: usize,
    pub l: usize,
    pub grid: usize,
    /// `sup_{j,x} |E_j − E_{K,j}|`.
    pub drift: f64,
    /// `sup|a − a_K| + 2 sup|b − b_K|` on the real line: Weyl's bound for the drift.
    pub weyl_bound: f64,
}

pub fn truncation_drift(pair: &SamplingPair, omega: f64, k: usize, l: usize, grid: usize) -> Result<DriftReport> {
    if k == 0 {
        return Err(Error::InvalidInput("truncation degree must be at least 1".into()));
    }
    let cut = pair.truncated(k);
    let drifts: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / grid as f64;
            let e = eigenvalues(&window(pair, x, omega, l)?)?;
            let ek = eigenvalues(&window(&cut, x, omega, l)?)?;
            Ok(e.iter().zip(&ek).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(DriftReport {
        k,
        l,
        grid,
        drift: drifts.into_iter().fold(0.0f64, f64::max),
        weyl_bound: pair.a.tail_bound(k, 0.0) + 2.0 * pair.b.tail_bound(k, 0.0),
    })
}

// ---------------------------------------------------------------------------
// Scale relations

/// `l = 2⌊(ln N)^A⌋`, `Q = (ln N)^{6A}`, `M = N`, `σ = 2/(N (ln N)^p)`, `τ = (ln N)^{−5A}`.
/// `Q` is capped at `q_cap` so that `Q ≤ M` at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperParameters {
    pub n: usize,
    pub a: f64,
    pub p: f64,
    pub l: usize,
    pub q_raw: f64,
    pub q: i64,
    pub m_max: i64,
    pub sigma: f64,
    pub tau: f64,
}

pub fn paper_parameters(n: usize, a: f64, p: f64, q_cap: i64) -> PaperParameters {
    let ln = (n as f64).ln();
    let l = 2 * ln.powf(a).floor() as usize;
    let q_raw = ln.powf(6.0 * a);
    let m_max = (n as i64).min(DESK_SHIFT_BOUND);
    let q = (q_raw.ceil() as i64).min(q_cap).min(m_max);
    PaperParameters { n, a, p, l: l.max(1), q_raw, q, m_max, sigma: 2.0 / (n as f64 * ln.powf(p)), tau: ln.powf(-5.0 * a) }
}

/// Length pairs `(l, l′)` with `l′ ∈ {l, l+1, 2l, 2l+1}` scanned by the preset.
pub fn preset_length_pairs(l: usize) -> Vec<(usize, usize)> {
    [l, l + 1, 2 * l, 2 * l + 1].iter().map(|&b| (l, b)).collect()
}
