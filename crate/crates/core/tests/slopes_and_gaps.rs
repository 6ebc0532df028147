mod common;

use common::*;
use quasijacobi::frequency::GOLDEN;
use quasijacobi::operator::{build_window, eigenvalues, window, Interval};
use quasijacobi::resonance::*;
use quasijacobi::{SamplingPair, TrigPolynomial};
use rand::Rng;
use std::f64::consts::PI;

#[test]
fn perturbation_slope_matches_central_difference() {
    let h = 1e-6;
    let mut r = rng(31);
    let mut compared = 0;
    for pair in models(11, 12, 3) {
        let n = 32;
        let x = r.gen_range(0.0..1.0);
        let here = branches(&pair, x, GOLDEN, n).unwrap();
        let central = |step: f64| {
            let plus = eigenvalues(&window(&pair, x + step, GOLDEN, n).unwrap()).unwrap();
            let minus = eigenvalues(&window(&pair, x - step, GOLDEN, n).unwrap()).unwrap();
            plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * step)).collect::<Vec<f64>>()
        };
        let (coarse, fine) = (central(h), central(0.5 * h));
        for j in 0..n {
            if here[j].gap < 1e-3 {
                continue;
            }
            compared += 1;
            // Richardson removes the O(h²) term, which near avoided crossings exceeds 1e-5
            let fd = (4.0 * fine[j] - coarse[j]) / 3.0;
            assert!((fd - here[j].slope).abs() < 1e-5, "j={j}: {} vs {fd}", here[j].slope);
            let single = eigenvalue_slope(&pair, x, GOLDEN, Interval::first(n).unwrap(), j).unwrap();
            assert!((single.value - here[j].slope).abs() < 1e-8);
        }
    }
    assert!(compared > 200);
}

#[test]
fn spectra_distance_matches_brute_force() {
    let pair = SamplingPair::almost_mathieu(3.0);
    let (x, l, m) = (0.27, 32, 100);
    let s1 = eigenvalues(&window(&pair, x, GOLDEN, l).unwrap()).unwrap();
    let s2 = eigenvalues(&window(&pair, x + m as f64 * GOLDEN, GOLDEN, l).unwrap()).unwrap();
    let mut brute = f64::INFINITY;
    for a in &s1 {
        for b in &s2 {
            brute = brute.min((a - b).abs());
        }
    }
    let d = spectra_distance(&pair, x, GOLDEN, l, l, m, (-100.0, 100.0)).unwrap();
    assert_eq!(d.value, brute);
}

#[test]
fn spectra_distance_covariance() {
    let pair = models(12, 1, 2).remove(0);
    let (x, m, n_shift) = (0.41, 57i64, 13i64);
    let moved = (x + n_shift as f64 * GOLDEN).rem_euclid(1.0);
    let d = spectra_distance(&pair, moved, GOLDEN, 20, 24, m, (-50.0, 50.0)).unwrap().value;
    // same windows, labelled as intervals at the original phase
    let w1 = build_window(&pair, c(x, 0.0), GOLDEN, Interval::new(n_shift, n_shift + 19).unwrap()).unwrap();
    let w2 = build_window(&pair, c(x, 0.0), GOLDEN, Interval::new(n_shift + m, n_shift + m + 23).unwrap()).unwrap();
    let want = min_distance_sorted(&eigenvalues(&w1).unwrap(), &eigenvalues(&w2).unwrap());
    assert!((d - want).abs() < 1e-10);
}

#[test]
fn free_model_gaps_closed_form() {
    let n = 64;
    let rep = gap_report(&SamplingPair::free(), 0.0, GOLDEN, n, 16.0, &IntervalUnion::new()).unwrap();
    let mut exact: Vec<f64> = (1..=n).map(|k| 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos()).collect();
    exact.sort_by(f64::total_cmp);
    for j in 0..n {
        assert!((rep.eigenvalues[j] - exact[j]).abs() < 1e-12);
        let left = if j > 0 { exact[j] - exact[j - 1] } else { f64::INFINITY };
        let right = if j + 1 < n { exact[j + 1] - exact[j] } else { f64::INFINITY };
        assert!((rep.min_gaps[j] - left.min(right)).abs() < 1e-12);
    }
    // the smallest spacing sits at the band edges: 2cos(π/(N+1)) − 2cos(2π/(N+1))
    let edge = 2.0 * (PI / 65.0).cos() - 2.0 * (2.0 * PI / 65.0).cos();
    let min = rep.min_gaps.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((min - edge).abs() < 1e-12);
    assert_eq!(rep.counted, n);
}

#[test]
fn almost_mathieu_spectrum_is_simple() {
    let rep = gap_report(&SamplingPair::almost_mathieu(3.0), 0.0, GOLDEN, 256, 16.0, &IntervalUnion::new()).unwrap();
    assert!(rep.min_gaps.iter().all(|g| *g > 0.0));
    assert!((0.0..=1.0).contains(&rep.below_fraction));
}

fn geometric_model(ratio: f64, degree: i64) -> SamplingPair {
    let a = TrigPolynomial::from_pairs((-degree..=degree).map(|n| (n, c(ratio.powi(n.abs() as i32), 0.0))), true).unwrap();
    SamplingPair::new(a, TrigPolynomial::constant(c(1.0, 0.0)), 0.5).unwrap()
}

#[test]
fn truncation_drift_tracks_the_tail() {
    let pair = geometric_model(0.5, 30);
    let d10 = truncation_drift(&pair, GOLDEN, 10, 16, 64).unwrap();
    let d20 = truncation_drift(&pair, GOLDEN, 20, 16, 64).unwrap();
    assert!(d10.drift <= d10.weyl_bound && d20.drift <= d20.weyl_bound);
    let ratio = d20.drift / d10.drift;
    let tail_ratio = d20.weyl_bound / d10.weyl_bound;
    assert!(ratio > tail_ratio / 10.0 && ratio < tail_ratio * 10.0, "{ratio:e} vs {tail_ratio:e}");
}

#[test]
fn derivative_stability_envelope() {
    let pair = SamplingPair::almost_mathieu(3.0);
    let rows = derivative_stability(&pair, 0.2, GOLDEN, GOLDEN + 1e-8, 32, 1e-3).unwrap();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    assert!(ratios.len() > 25);
    assert!(ratios.iter().all(|r| *r <= 1e2), "{ratios:?}");
}

#[test]
fn slope_guarantee_on_finer_grid() {
    let pair = SamplingPair::almost_mathieu(3.0);
    let tau = 0.05;
    let bad = slope_bad_set(&pair, GOLDEN, 16, tau, 512, None).unwrap();
    assert!(bad.set.intervals().iter().all(|iv| iv[0] >= bad.energy_range.0 - 1.0 && iv[1] <= bad.energy_range.1 + 1.0));
    let check = verify_slope_bad_set(&pair, GOLDEN, 16, tau, &bad.set, 2048).unwrap();
    assert!(check.violations.is_empty(), "{:?}", &check.violations[..check.violations.len().min(3)]);
}

#[test]
fn refinement_clears_scan_violations() {
    let pair = SamplingPair::almost_mathieu(3.0);
    let bad = slope_bad_set(&pair, GOLDEN, 8, 0.05, 256, None).unwrap();
    let params = ScanParams::single(8, 1e-3, 10, 60, 32);
    let first = elimination_scan(&pair, GOLDEN, &params, &bad.set).unwrap();
    let refined = refine_with_events(&bad.set, &first.events, params.sigma);
    let second = elimination_scan(&pair, GOLDEN, &params, &refined).unwrap();
    assert_eq!(second.events.len(), first.events.len());
    assert_eq!(second.violations, 0);
    assert_eq!(first.reclassify(&refined), second);
    for w in first.events.windows(2) {
        let key = |e: &ResonanceEvent| (e.x, e.m, e.j, e.k);
        assert!(key(&w[0]).partial_cmp(&key(&w[1])) == Some(std::cmp::Ordering::Less));
    }
}

#[test]
fn ldt_fractions_extremes() {
    let pair = SamplingPair::almost_mathieu(3.0);
    let rep = ldt_empirical(&pair, GOLDEN, 0.4, 64, &[0.0, 1.0, 4.0, 1e6], 1024, 1.0).unwrap();
    assert!(rep.fractions[0].1 > 0.99);
    assert_eq!(rep.fractions[3].1, 0.0);
    assert!(rep.fractions.windows(2).all(|w| w[1].1 <= w[0].1));
}
