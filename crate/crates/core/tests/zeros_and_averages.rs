mod common;

use common::*;
use quasijacobi::frequency::{grid_denominator, GOLDEN};
use quasijacobi::operator::{eigenvalues, window, Interval};
use quasijacobi::sampling::mean_log_modulus;
use quasijacobi::transfer::{count_zeros_disk, lyapunov, EnergySlice, PhaseSlice, Variant};
use quasijacobi::{SamplingPair, TrigPolynomial};
use rand::Rng;
use std::f64::consts::PI;

#[test]
fn argument_principle_counts_eigenvalues() {
    let mut r = rng(41);
    for pair in models(13, 40, 2) {
        let n = r.gen_range(1..=32);
        let x = r.gen_range(0.0..1.0);
        let spec = eigenvalues(&window(&pair, x, GOLDEN, n).unwrap()).unwrap();
        let center = c(r.gen_range(spec[0] - 0.5..spec[n - 1] + 0.5), r.gen_range(-0.2..0.2));
        let radius = r.gen_range(0.05..1.5);
        let slice = EnergySlice { pair: &pair, z: c(x, 0.0), omega: GOLDEN, interval: Interval::first(n).unwrap() };
        let count = count_zeros_disk(&slice, center, radius, 64).unwrap();
        let inside = spec.iter().filter(|e| (c(**e, 0.0) - center).norm() < count.radius).count();
        assert_eq!(count.count, inside as i64, "n={n} center={center} r={radius}");
    }
}

#[test]
fn phase_zeros_of_a_single_site() {
    // f(z) = 2cos(2πz) − E vanishes at z = ±acos(E/2)/(2π) mod 1
    let pair = SamplingPair::almost_mathieu(1.0);
    let e = 0.6f64;
    let z0 = (e / 2.0).acos() / (2.0 * PI);
    let slice = PhaseSlice { pair: &pair, energy: c(e, 0.0), omega: GOLDEN, interval: Interval::first(1).unwrap() };
    let around = count_zeros_disk(&slice, c(z0, 0.0), 0.05, 64).unwrap();
    assert_eq!(around.count, 1);
    let both = count_zeros_disk(&slice, c(0.0, 0.0), z0 + 0.05, 64).unwrap();
    assert_eq!(both.count, 2);
    let none = count_zeros_disk(&slice, c(0.5, 0.0), 0.1, 64).unwrap();
    assert_eq!(none.count, 0);
}

#[test]
fn jensen_formula_for_mean_log_modulus() {
    // mean over x of log|c0 + c1 e(x + iy)| = max(log|c0|, log|c1| − 2πy)
    for (c0, c1, y) in [(1.0, 0.5, 0.0), (0.3, 1.0, 0.0), (1.0, 2.0, 0.2), (1.0, 2.0, -0.1), (0.7, 0.2, 0.15)] {
        let b = TrigPolynomial::from_pairs([(0, c(c0, 0.0)), (1, c(0.0, c1))], false).unwrap();
        let want = f64::max(c0.ln(), c1.ln() - 2.0 * PI * y);
        let got = mean_log_modulus(&b, y, 512);
        assert!((got.value - want).abs() < 1e-10, "({c0},{c1},{y}): {} vs {want}", got.value);
    }
}

#[test]
fn free_lyapunov_outside_the_band() {
    let e = 3.0f64;
    let est = lyapunov(&SamplingPair::free(), 0.0, GOLDEN, e, 2000, 8, Variant::Plain).unwrap();
    let exact = (e / 2.0).acosh();
    // finite-N bias is log(1 − e^{−2NL})/N plus an O(1/N) norm offset
    assert!((est.value - exact).abs() < 2e-3, "{} vs {exact}", est.value);
}

#[test]
fn herman_bound_and_relation() {
    let pair = SamplingPair::almost_mathieu(3.0);
    let grid = grid_denominator(GOLDEN, 1024) as usize;
    let spec = eigenvalues(&window(&pair, 0.0, GOLDEN, 128).unwrap()).unwrap();
    for j in [3usize, 40, 64, 100] {
        let est = lyapunov(&pair, 0.0, GOLDEN, spec[j], 128, grid, Variant::Plain).unwrap();
        assert!(est.value >= 3f64.ln() - 0.05, "E={} L={}", spec[j], est.value);
        assert!(est.relation_residual <= 1e-6);
    }
}

#[test]
fn relation_with_nonconstant_coupling() {
    let pair = models(14, 1, 2).remove(0);
    let est = lyapunov(&pair, 0.0, GOLDEN, 0.3, 64, 987, Variant::U).unwrap();
    assert!(est.relation_residual <= 1e-6, "{}", est.relation_residual);
    let direct = mean_log_modulus(&pair.b, 0.0, 987);
    assert!((est.mean_log_b - direct.value).abs() < 1e-6);
}
