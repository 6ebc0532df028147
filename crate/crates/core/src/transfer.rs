//! Transfer matrices `M_N`, `M_N^a`, `M_N^u`, Birkhoff sums, Lyapunov
//! exponents and argument-principle zero counting.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pairwise_mean, CompensatedSum};
use crate::operator::{build_window, site_phase, Interval};
use crate::sampling::{mean_log_modulus, SamplingPair};
use crate::scaled::{ScaledMatrix2, ScaledValue};

/// Which normalisation of the cocycle to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `M_N`: steps divided by `b(z + (j+1)ω)`.
    Plain,
    /// `M_N^a`: polynomial entries, never divides.
    A,
    /// `M_N^u`: unimodular steps.
    U,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "a" => Ok(Variant::A),
            "u" => Ok(Variant::U),
            _ => Err(Error::InvalidInput(format!("unknown variant '{s}'"))),
        }
    }
}

/// Products are renormalised every `cadence` steps, and also whenever an
/// entry leaves `[2^-200, 2^200]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductOptions {
    pub cadence: usize,
    /// Plain and u variants refuse couplings below `floor · ‖b‖₁` on the orbit.
    pub coupling_floor: f64,
}

impl Default for ProductOptions {
    fn default() -> Self {
        Self { cadence: 1, coupling_floor: 1e-10 }
    }
}

/// Step matrix `[[a(z+jω) − E, −b̃(z+jω)], [b(z+(j+1)ω), 0]]`.
pub fn step_matrix(pair: &SamplingPair, z: Complex64, omega: f64, j: i64, energy: Complex64) -> [[Complex64; 2]; 2] {
    let zj = site_phase(z, omega, j);
    let zj1 = site_phase(z, omega, j + 1);
    [
        [pair.a_at(zj) - energy, -pair.tilde_b_at(zj)],
        [pair.b_at(zj1), Complex64::new(0.0, 0.0)],
    ]
}

const LOOSE: f64 = 1.6e60; // 2^200

fn needs_normalize(m: &ScaledMatrix2) -> bool {
    let e = m.mantissa();
    let big = e.iter().flatten().fold(0.0f64, |a, z| a.max(z.norm()));
    !(big < LOOSE && big > 1.0 / LOOSE)
}

/// Left product `step_{N-1} ⋯ step_0` of the chosen variant.
pub fn transfer_product(pair: &SamplingPair, z: Complex64, omega: f64, n: usize, energy: Complex64, variant: Variant) -> Result<ScaledMatrix2> {
    transfer_product_with(pair, z, omega, n, energy, variant, ProductOptions::default())
}

pub fn transfer_product_with(
    pair: &SamplingPair,
    z: Complex64,
    omega: f64,
    n: usize,
    energy: Complex64,
    variant: Variant,
    opts: ProductOptions,
) -> Result<ScaledMatrix2> {
    pair.check_strip(z)?;
    let cadence = opts.cadence.max(1);
    let floor = opts.coupling_floor * pair.b.l1_norm();
    let mut acc = ScaledMatrix2::identity();
    for j in 0..n as i64 {
        let mut step = step_matrix(pair, z, omega, j, energy);
        match variant {
            Variant::A => {}
            Variant::Plain => {
                let bj = step[1][0];
                if bj.norm() < floor {
                    return Err(Error::VanishingCoupling { site: j + 1 });
                }
                for e in step.iter_mut().flatten() {
                    *e /= bj;
                }
            }
            Variant::U => {
                let (lower, upper) = (step[1][0].norm(), step[0][1].norm());
                if upper < floor {
                    return Err(Error::VanishingCoupling { site: j });
                }
                if lower < floor {
                    return Err(Error::VanishingCoupling { site: j + 1 });
                }
                let d = (lower * upper).sqrt();
                for e in step.iter_mut().flatten() {
                    *e /= d;
                }
            }
        }
        let s = ScaledMatrix2::new_raw(step);
        acc = s.mul_raw(&acc);
        if (j as usize + 1) % cadence == 0 || needs_normalize(&acc) {
            acc.normalize();
        }
    }
    acc.normalize();
    Ok(acc)
}

/// `det M_N^a(z)` as the product of the step determinants, accumulated in
/// scaled form. Computing it from the entries of the product loses about
/// `2N·L` digits to cancellation.
pub fn cocycle_determinant(pair: &SamplingPair, z: Complex64, omega: f64, n: usize, energy: Complex64) -> Result<ScaledValue> {
    pair.check_strip(z)?;
    let mut acc = ScaledValue::ONE;
    for j in 0..n as i64 {
        let s = step_matrix(pair, z, omega, j, energy);
        acc = acc * ScaledValue::from(s[0][0] * s[1][1] - s[0][1] * s[1][0]);
    }
    Ok(acc)
}

/// `S_N(z) = Σ_{k<N} log|b(z+kω)|` and `S̃_N(z)` with `b̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffSums {
    pub s: f64,
    pub s_tilde: f64,
    /// First site where `b` or `b̃` vanished (the sums are then `-inf`).
    pub zero_site: Option<i64>,
}

pub fn birkhoff_sums(pair: &SamplingPair, z: Complex64, omega: f64, n: usize) -> Result<BirkhoffSums> {
    pair.check_strip(z)?;
    let mut s = CompensatedSum::new();
    let mut st = CompensatedSum::new();
    let mut zero_site = None;
    for k in 0..n as i64 {
        let zk = site_phase(z, omega, k);
        let (b, bt) = (pair.b_at(zk).norm(), pair.tilde_b_at(zk).norm());
        if (b == 0.0 || bt == 0.0) && zero_site.is_none() {
            zero_site = Some(k);
        }
        s.add(b.ln());
        st.add(bt.ln());
    }
    if zero_site.is_some() {
        return Ok(BirkhoffSums { s: f64::NEG_INFINITY, s_tilde: f64::NEG_INFINITY, zero_site });
    }
    Ok(BirkhoffSums { s: s.value(), s_tilde: st.value(), zero_site })
}

/// Phase-grid estimate of `L_N(y, ω, E)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub n: usize,
    pub y: f64,
    pub energy: f64,
    pub value: f64,
    pub variant: Variant,
    pub grid_size: usize,
    /// Half the gap between even- and odd-index grid means.
    pub quadrature_error_estimate: f64,
    /// `L_N^a` on the same grid.
    pub analytic_value: f64,
    /// Grid quadrature `D_N` of `D(y)`.
    pub mean_log_b: f64,
    /// `|L_N − (L_N^a − D_N)|`.
    pub relation_residual: f64,
    /// Grid points dropped because `b` vanished on the orbit (plain variant).
    pub excluded_points: usize,
}

/// Per-point values `(log‖M‖/N of the variant, log‖M^a‖/N)`; `None` marks an excluded point.
fn lyapunov_point(pair: &SamplingPair, z: Complex64, omega: f64, energy: Complex64, n: usize, variant: Variant) -> Result<(Option<f64>, f64)> {
    let ma = transfer_product(pair, z, omega, n, energy, Variant::A)?.log_norm() / n as f64;
    let v = match variant {
        Variant::A => Some(ma),
        other => match transfer_product(pair, z, omega, n, energy, other) {
            Ok(m) => Some(m.log_norm() / n as f64),
            Err(Error::VanishingCoupling { .. }) => None,
            Err(e) => return Err(e),
        },
    };
    Ok((v, ma))
}

fn split_half(values: &[f64]) -> f64 {
    let even: Vec<f64> = values.iter().step_by(2).copied().collect();
    let odd: Vec<f64> = values.iter().skip(1).step_by(2).copied().collect();
    if odd.is_empty() {
        return 0.0;
    }
    0.5 * (pairwise_mean(&even) - pairwise_mean(&odd)).abs()
}

/// `L_N = (1/N) ∫ log‖M_N(x+iy)‖ dx` on the grid `x_i = i/grid_size`.
pub fn lyapunov(pair: &SamplingPair, y: f64, omega: f64, energy: f64, n: usize, grid_size: usize, variant: Variant) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be positive".into()));
    }
    if grid_size < 8 {
        return Err(Error::InvalidInput(format!("grid size {grid_size} below 8")));
    }
    pair.check_strip(Complex64::new(0.0, y))?;
    let e = Complex64::new(energy, 0.0);
    let points: Vec<(Option<f64>, f64)> = (0..grid_size)
        .into_par_iter()
        .map(|i| lyapunov_point(pair, Complex64::new(i as f64 / grid_size as f64, y), omega, e, n, variant))
        .collect::<Result<_>>()?;
    let kept: Vec<f64> = points.iter().filter_map(|p| p.0).collect();
    let analytic: Vec<f64> = points.iter().map(|p| p.1).collect();
    let value = pairwise_mean(&kept);
    let analytic_value = pairwise_mean(&analytic);
    let d = mean_log_modulus(&pair.b, y, grid_size).value;
    let relation_residual = match variant {
        Variant::A => 0.0,
        _ => (value - (analytic_value - d)).abs(),
    };
    Ok(LyapunovEstimate {
        n,
        y,
        energy,
        value,
        variant,
        grid_size,
        quadrature_error_estimate: split_half(&kept),
        analytic_value,
        mean_log_b: d,
        relation_residual,
        excluded_points: grid_size - kept.len(),
    })
}

/// `sup_x log‖M_N^a(x+iy)‖ − N·L_N^a` on the grid (non-negative by Jensen).
pub fn upper_envelope(pair: &SamplingPair, y: f64, omega: f64, energy: f64, n: usize, grid_size: usize) -> Result<f64> {
    let e = Complex64::new(energy, 0.0);
    let logs: Vec<f64> = (0..grid_size)
        .into_par_iter()
        .map(|i| Ok(transfer_product(pair, Complex64::new(i as f64 / grid_size as f64, y), omega, n, e, Variant::A)?.log_norm()))
        .collect::<Result<_>>()?;
    let sup = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(sup - pairwise_mean(&logs))
}

/// An analytic function of one complex variable evaluated in scaled form.
pub trait AnalyticFunction: Sync {
    fn eval(&self, w: Complex64) -> Result<ScaledValue>;
}

/// `E ↦ f^a_Λ(z, ω, E)` at fixed phase.
#[derive(Debug, Clone)]
pub struct EnergySlice<'a> {
    pub pair: &'a SamplingPair,
    pub z: Complex64,
    pub omega: f64,
    pub interval: Interval,
}

impl AnalyticFunction for EnergySlice<'_> {
    fn eval(&self, w: Complex64) -> Result<ScaledValue> {
        Ok(build_window(self.pair, self.z, self.omega, self.interval)?.determinant(w))
    }
}

/// `z ↦ f^a_Λ(z, ω, E)` at fixed energy.
#[derive(Debug, Clone)]
pub struct PhaseSlice<'a> {
    pub pair: &'a SamplingPair,
    pub energy: Complex64,
    pub omega: f64,
    pub interval: Interval,
}

impl AnalyticFunction for PhaseSlice<'_> {
    fn eval(&self, w: Complex64) -> Result<ScaledValue> {
        Ok(build_window(self.pair, w, self.omega, self.interval)?.determinant(self.energy))
    }
}

impl<F: Fn(Complex64) -> Result<ScaledValue> + Sync> AnalyticFunction for F {
    fn eval(&self, w: Complex64) -> Result<ScaledValue> {
        self(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCount {
    pub count: i64,
    pub samples: usize,
    pub radius: f64,
    /// Accumulated phase / 2π before rounding.
    pub winding: f64,
}

const MAX_SAMPLES: usize = 1 << 18;
const MAX_STEP: f64 = PI / 3.0;

/// (winding, max |Δarg|) on a circle sampled at `samples` points.
fn winding<F: AnalyticFunction + ?Sized>(f: &F, center: Complex64, radius: f64, samples: usize) -> Result<Option<(f64, f64)>> {
    let units: Vec<Option<Complex64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let t = 2.0 * PI * k as f64 / samples as f64;
            let v = f.eval(center + Complex64::from_polar(radius, t))?;
            Ok(if v.is_zero() { None } else { Some(v.unit()) })
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut max_step = 0.0f64;
    for k in 0..samples {
        let (Some(u), Some(v)) = (units[k], units[(k + 1) % samples]) else {
            return Ok(None);
        };
        let d = (v / u).arg();
        max_step = max_step.max(d.abs());
        total += d;
    }
    Ok(Some((total / (2.0 * PI), max_step)))
}

/// Number of zeros of `f` in the open disk, by the argument principle.
///
/// Sampling starts at `samples` points and doubles until two consecutive
/// resolutions give the same integer with every phase step below π/3. If that
/// fails the radius is nudged outward, by at most 1%.
pub fn count_zeros_disk<F: AnalyticFunction + ?Sized>(f: &F, center: Complex64, radius: f64, samples: usize) -> Result<ZeroCount> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let mut last_err = String::new();
    for nudge in [1.0, 1.0025, 1.005, 1.01] {
        let r = radius * nudge;
        let mut n = samples.max(16);
        let mut previous: Option<i64> = None;
        while n <= MAX_SAMPLES {
            match winding(f, center, r, n)? {
                None => {
                    last_err = format!("zero on the contour at radius {r}");
                    break;
                }
                Some((w, step)) => {
                    let rounded = w.round();
                    let ok = step < MAX_STEP && (w - rounded).abs() < 0.25;
                    if ok && previous == Some(rounded as i64) {
                        return Ok(ZeroCount { count: rounded as i64, samples: n, radius: r, winding: w });
                    }
                    previous = if ok { Some(rounded as i64) } else { None };
                    last_err = format!("winding {w:.4} with max step {step:.3} at {n} samples");
                }
            }
            n *= 2;
        }
    }
    Err(Error::WindingUnstable(last_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{determinant_n, eigenvalues, window};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GOLDEN: f64 = crate::frequency::GOLDEN;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = SamplingPair::random(&mut rng, 3);
        let z = c(0.2, 0.1);
        let e = c(0.3, 0.2);
        let m = transfer_product(&pair, z, GOLDEN, 1, e, Variant::A).unwrap().to_plain();
        let expect = step_matrix(&pair, z, GOLDEN, 0, e);
        for r in 0..2 {
            for col in 0..2 {
                assert!((m[r][col] - expect[r][col]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn entry_identity_n6() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pair = SamplingPair::random(&mut rng, 3);
        let (z, e, n) = (c(0.41, -0.07), c(-0.6, 0.3), 6);
        let m = transfer_product(&pair, z, GOLDEN, n, e, Variant::A).unwrap();
        let f = |zz: Complex64, k: usize| determinant_n(&pair, zz, GOLDEN, k, e).unwrap();
        let bt = ScaledValue::from(pair.tilde_b_at(z));
        let bn = ScaledValue::from(pair.b_at(site_phase(z, GOLDEN, n as i64)));
        let z1 = site_phase(z, GOLDEN, 1);
        assert!(m.entry(0, 0).relative_error(&f(z, n)) < 1e-10);
        assert!(m.entry(0, 1).relative_error(&(-(bt * f(z1, n - 1)))) < 1e-10);
        assert!(m.entry(1, 0).relative_error(&(bn * f(z, n - 1))) < 1e-10);
        assert!(m.entry(1, 1).relative_error(&(-(bt * bn * f(z1, n - 2)))) < 1e-10);
    }

    #[test]
    fn unimodular_and_plain_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pair = SamplingPair::random(&mut rng, 2);
        let (z, e, n) = (c(0.13, 0.04), c(0.5, 0.0), 40);
        let ma = transfer_product(&pair, z, GOLDEN, n, e, Variant::A).unwrap();
        let mu = transfer_product(&pair, z, GOLDEN, n, e, Variant::U).unwrap();
        let mp = transfer_product(&pair, z, GOLDEN, n, e, Variant::Plain).unwrap();
        let s0 = birkhoff_sums(&pair, z, GOLDEN, n).unwrap();
        let s1 = birkhoff_sums(&pair, site_phase(z, GOLDEN, 1), GOLDEN, n).unwrap();
        assert!((mu.log_norm() - (ma.log_norm() - 0.5 * (s0.s_tilde + s1.s))).abs() < 1e-9);
        assert!((mp.log_norm() - (ma.log_norm() - s1.s)).abs() < 1e-9);
        // the determinant of a long product cancels catastrophically; check a short one
        let short = transfer_product(&pair, z, GOLDEN, 3, e, Variant::U).unwrap();
        assert!(short.det().log_magnitude().abs() < 1e-10);
    }

    #[test]
    fn cadence_independence() {
        let pair = SamplingPair::almost_mathieu(3.0);
        let e = c(0.7, 0.0);
        let one = transfer_product_with(&pair, c(0.3, 0.0), GOLDEN, 500, e, Variant::A, ProductOptions { cadence: 1, ..Default::default() }).unwrap();
        let sixteen = transfer_product_with(&pair, c(0.3, 0.0), GOLDEN, 500, e, Variant::A, ProductOptions { cadence: 16, ..Default::default() }).unwrap();
        assert!((one.log_norm() - sixteen.log_norm()).abs() < 1e-10);
    }

    #[test]
    fn unimodular_rejects_zero_coupling() {
        let b = crate::sampling::TrigPolynomial::from_pairs([(0, c(1.0, 0.0)), (1, c(1.0, 0.0))], false).unwrap();
        let pair = SamplingPair::new(crate::sampling::TrigPolynomial::cosine(1.0), b, 0.5).unwrap();
        // b(0.5) = 0; site 2 with ω = 0.25 starting at 0
        let err = transfer_product(&pair, c(0.0, 0.0), 0.25, 4, c(0.0, 0.0), Variant::U).unwrap_err();
        assert!(matches!(err, Error::VanishingCoupling { site: 2 }));
    }

    #[test]
    fn birkhoff_examples() {
        let pair = SamplingPair::free();
        assert_eq!(birkhoff_sums(&pair, c(0.3, 0.0), GOLDEN, 10).unwrap().s, 0.0);
        let b = crate::sampling::TrigPolynomial::monomial(1, c(2.5, 0.0));
        let pair = SamplingPair::new(crate::sampling::TrigPolynomial::cosine(1.0), b, 0.5).unwrap();
        let s = birkhoff_sums(&pair, c(0.3, 0.0), GOLDEN, 10).unwrap();
        assert!((s.s - 10.0 * 2.5f64.ln()).abs() < 1e-12);
        assert!((s.s - s.s_tilde).abs() < 1e-12);
    }

    #[test]
    fn free_lyapunov_outside_band() {
        let pair = SamplingPair::free();
        let est = lyapunov(&pair, 0.0, GOLDEN, 3.0, 2000, 8, Variant::Plain).unwrap();
        let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((est.value - expect).abs() < 2e-3, "{}", est.value);
        assert!(est.relation_residual < 1e-12);
    }

    #[test]
    fn energy_disk_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pair = SamplingPair::random(&mut rng, 2);
        let n = 12;
        let w = window(&pair, 0.27, GOLDEN, n).unwrap();
        let spec = eigenvalues(&w).unwrap();
        let slice = EnergySlice { pair: &pair, z: c(0.27, 0.0), omega: GOLDEN, interval: Interval::first(n).unwrap() };
        let lo = spec[0] - 1.0;
        let hi = spec[n - 1] + 1.0;
        let all = count_zeros_disk(&slice, c(0.5 * (lo + hi), 0.0), 0.5 * (hi - lo), 512).unwrap();
        assert_eq!(all.count, n as i64);
        let none = count_zeros_disk(&slice, c(hi + 10.0, 0.0), 1.0, 512).unwrap();
        assert_eq!(none.count, 0);
        for _ in 0..10 {
            let center = c(rng.gen_range(lo..hi), rng.gen_range(-0.2..0.2));
            let r = rng.gen_range(0.05..1.0);
            let expect = spec.iter().filter(|&&e| (c(e, 0.0) - center).norm() < r).count() as i64;
            assert_eq!(count_zeros_disk(&slice, center, r, 512).unwrap().count, expect);
        }
    }
}
