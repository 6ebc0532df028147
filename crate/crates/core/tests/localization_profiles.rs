use quasijacobi::frequency::GOLDEN;
use quasijacobi::localization::{proximity_sweep, profiles};
use quasijacobi::SamplingPair;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn localized_rates_follow_the_lyapunov_exponent() {
    let n = 160;
    let rows = profiles(&SamplingPair::almost_mathieu(3.0), 0.17, GOLDEN, n, 12, &[4, 8, 12]).unwrap();
    let rates: Vec<f64> = rows.iter().filter(|p| p.center > 40 && p.center < n - 40).filter_map(|p| p.fitted_rate).collect();
    assert!(rates.len() > 40);
    // L = log 3 on the whole spectrum
    let m = median(rates);
    assert!((m - 3f64.ln()).abs() < 0.15, "median rate {m}");
    for p in &rows {
        assert!(p.tail_mass.windows(2).all(|w| w[1].1 <= w[0].1));
    }
}

#[test]
fn extended_states_have_no_rate() {
    let rows = profiles(&SamplingPair::free(), 0.0, GOLDEN, 160, 12, &[12]).unwrap();
    let rates: Vec<f64> = rows.iter().filter_map(|p| p.fitted_rate).map(f64::abs).collect();
    let m = median(rates);
    assert!(m < 0.02, "median |rate| {m}");
}

#[test]
fn localized_resonances_are_rare() {
    let out = proximity_sweep(&SamplingPair::almost_mathieu(3.0), 0.17, GOLDEN, 120, 1e-6, 15).unwrap();
    assert!(out.len() <= 2, "{out:?}");
}
